#include "bonet/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <vector>

#include "bonet/errors.hpp"

namespace bonet {

namespace {

constexpr char kMagic[4] = {'B', 'T', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

nlohmann::json config_to_json(const ModelConfig& cfg) {
    return nlohmann::json{{"embed_dim", cfg.embed_dim},
                          {"n_heads", cfg.n_heads},
                          {"n_layers", cfg.n_layers},
                          {"context_len", cfg.context_len},
                          {"max_timestep", cfg.max_timestep},
                          {"kind", cfg.kind == TaskKind::discrete ? "discrete" : "continuous"},
                          {"dim", cfg.dim},
                          {"vocab", cfg.vocab},
                          {"head_variance", cfg.head_variance}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig cfg;
    cfg.embed_dim = j.at("embed_dim").get<int>();
    cfg.n_heads = j.at("n_heads").get<int>();
    cfg.n_layers = j.at("n_layers").get<int>();
    cfg.context_len = j.at("context_len").get<int>();
    cfg.max_timestep = j.at("max_timestep").get<int>();
    cfg.kind = j.at("kind").get<std::string>() == "discrete" ? TaskKind::discrete
                                                             : TaskKind::continuous;
    cfg.dim = j.at("dim").get<int>();
    cfg.vocab = j.at("vocab").get<int>();
    cfg.head_variance = j.at("head_variance").get<double>();
    return cfg;
}

class ChecksumWriter {
public:
    explicit ChecksumWriter(std::ostream& out) : out_(out) {}

    void write(const void* data, std::size_t n) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            hash_ ^= bytes[i];
            hash_ *= 0x100000001b3ull;
        }
        out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    }

    template <class T>
    void write_pod(T v) {
        write(&v, sizeof(T));
    }

    std::uint64_t hash() const { return hash_; }

private:
    std::ostream& out_;
    std::uint64_t hash_ = 0xcbf29ce484222325ull;
};

class ChecksumReader {
public:
    explicit ChecksumReader(std::istream& in, const std::string& what)
        : in_(in), what_(what) {}

    void read(void* data, std::size_t n) {
        in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw FormatError("truncated checkpoint " + what_);
        }
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            hash_ ^= bytes[i];
            hash_ *= 0x100000001b3ull;
        }
    }

    template <class T>
    T read_pod() {
        T v;
        read(&v, sizeof(T));
        return v;
    }

    std::uint64_t hash() const { return hash_; }

private:
    std::istream& in_;
    std::string what_;
    std::uint64_t hash_ = 0xcbf29ce484222325ull;
};

}  // namespace

void save_checkpoint(const Model<float>& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    ChecksumWriter w(out);
    w.write(kMagic, sizeof(kMagic));
    w.write_pod(kVersion);
    const std::string cfg = config_to_json(model.cfg).dump();
    w.write_pod(static_cast<std::uint32_t>(cfg.size()));
    w.write(cfg.data(), cfg.size());

    std::uint32_t count = 0;
    model.params.visit([&count](const std::string&, const Mat<float>&) { ++count; });
    w.write_pod(count);
    model.params.visit([&w](const std::string& name, const Mat<float>& m) {
        w.write_pod(static_cast<std::uint32_t>(name.size()));
        w.write(name.data(), name.size());
        w.write_pod(static_cast<std::uint32_t>(m.rows()));
        w.write_pod(static_cast<std::uint32_t>(m.cols()));
        w.write(m.data(), sizeof(float) * static_cast<std::size_t>(m.size()));
    });
    const std::uint64_t checksum = w.hash();
    out.write(reinterpret_cast<const char*>(&checksum), sizeof(checksum));
    if (!out) throw FormatError("failed writing checkpoint " + path.string());
}

Model<float> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("missing checkpoint file " + path.string());
    ChecksumReader r(in, path.string());
    char magic[4];
    r.read(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw FormatError("bad checkpoint magic in " + path.string());
    }
    if (r.read_pod<std::uint32_t>() != kVersion) {
        throw FormatError("unsupported checkpoint version in " + path.string());
    }
    const auto cfg_len = r.read_pod<std::uint32_t>();
    std::string cfg_str(cfg_len, '\0');
    r.read(cfg_str.data(), cfg_len);
    Model<float> model;
    model.cfg = config_from_json(nlohmann::json::parse(cfg_str));
    detail::shape_params(model.cfg, model.params);

    const auto count = r.read_pod<std::uint32_t>();
    std::uint32_t seen = 0;
    model.params.visit([&](const std::string& name, Mat<float>& m) {
        const auto name_len = r.read_pod<std::uint32_t>();
        std::string got(name_len, '\0');
        r.read(got.data(), name_len);
        if (got != name) {
            throw FormatError("checkpoint tensor '" + got + "' where '" + name +
                              "' was expected");
        }
        const auto rows = r.read_pod<std::uint32_t>();
        const auto cols = r.read_pod<std::uint32_t>();
        if (rows != static_cast<std::uint32_t>(m.rows()) ||
            cols != static_cast<std::uint32_t>(m.cols())) {
            throw FormatError("checkpoint tensor '" + name + "' has unexpected shape");
        }
        r.read(m.data(), sizeof(float) * static_cast<std::size_t>(m.size()));
        ++seen;
    });
    if (seen != count) throw FormatError("checkpoint tensor count mismatch");
    const std::uint64_t expected = r.hash();
    std::uint64_t stored;
    in.read(reinterpret_cast<char*>(&stored), sizeof(stored));
    if (in.gcount() != sizeof(stored)) throw FormatError("truncated checkpoint " + path.string());
    if (stored != expected) throw FormatError("checkpoint checksum mismatch in " + path.string());
    return model;
}

}  // namespace bonet
