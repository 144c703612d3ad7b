#include "bonet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "bonet/errors.hpp"
#include "bonet/rng.hpp"

namespace bonet {

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Keeps the n_keep lowest-valued points; value ties resolved by original index.
OfflineDataset keep_bottom(const OfflineDataset& ds, int n_keep) {
    std::vector<int> order(ds.n());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return ds.values[a] < ds.values[b]; });
    order.resize(n_keep);
    std::sort(order.begin(), order.end());  // survivors keep original order
    OfflineDataset out = ds;
    out.points.resize(n_keep, ds.points.cols());
    out.values.resize(n_keep);
    for (int i = 0; i < n_keep; ++i) {
        out.points.row(i) = ds.points.row(order[i]);
        out.values[i] = ds.values[order[i]];
    }
    return out;
}

}  // namespace

OfflineDataset generate_offline(const Task& task, int n_raw, double cut_fraction,
                                std::uint64_t seed) {
    if (n_raw < 10) throw ConfigError("generate_offline: n_raw must be >= 10");
    if (!(cut_fraction >= 0.0 && cut_fraction < 1.0)) {
        throw ConfigError("generate_offline: cut_fraction must be in [0, 1)");
    }
    const TaskSpec& spec = task.spec;
    Rng rng(seed);
    OfflineDataset ds;
    ds.task = spec;
    ds.points.resize(n_raw, spec.dim);
    ds.values.resize(n_raw);
    for (int i = 0; i < n_raw; ++i) {
        for (int j = 0; j < spec.dim; ++j) {
            if (spec.kind == TaskKind::discrete) {
                ds.points(i, j) = static_cast<double>(rng.uniform_int(spec.vocab));
            } else {
                ds.points(i, j) = rng.uniform(spec.bounds[j].first, spec.bounds[j].second);
            }
        }
        ds.values[i] = task.oracle(ds.points.row(i).transpose());
    }
    ds.f_star_ref = spec.f_star;
    const int n_keep = static_cast<int>(std::lround(n_raw * (1.0 - cut_fraction)));
    if (n_keep == n_raw) return ds;
    return keep_bottom(ds, n_keep);
}

OfflineDataset normalize_values(const OfflineDataset& ds, double y_min, double y_max) {
    if (!(y_max > y_min)) throw ConfigError("normalize_values: y_max must exceed y_min");
    OfflineDataset out = ds;
    const double scale = 1.0 / (y_max - y_min);
    out.values = (ds.values.array() - y_min) * scale;
    out.normalized = true;
    out.y_min_ref = y_min;
    out.y_max_ref = y_max;
    out.f_star_ref = (ds.f_star_ref - y_min) * scale;
    return out;
}

OfflineDataset add_value_noise(const OfflineDataset& ds, double scale_fraction,
                               std::uint64_t seed) {
    if (scale_fraction < 0.0) throw ConfigError("add_value_noise: scale must be >= 0");
    OfflineDataset out = ds;
    if (scale_fraction == 0.0) return out;
    const double sigma = scale_fraction * ds.values.array().abs().maxCoeff();
    Rng rng(seed);
    for (int i = 0; i < out.n(); ++i) out.values[i] += sigma * rng.normal();
    return out;
}

OfflineDataset withhold(const OfflineDataset& ds, double fraction, WithholdMode mode,
                        std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction < 1.0)) {
        throw ConfigError("withhold: fraction must be in [0, 1)");
    }
    const int n_remove = static_cast<int>(std::lround(ds.n() * fraction));
    if (n_remove == 0) return ds;
    const int n_keep = ds.n() - n_remove;
    if (mode == WithholdMode::top) return keep_bottom(ds, n_keep);
    std::vector<int> order(ds.n());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);
    order.resize(n_keep);
    std::sort(order.begin(), order.end());
    OfflineDataset out = ds;
    out.points.resize(n_keep, ds.points.cols());
    out.values.resize(n_keep);
    for (int i = 0; i < n_keep; ++i) {
        out.points.row(i) = ds.points.row(order[i]);
        out.values[i] = ds.values[order[i]];
    }
    return out;
}

void save_dataset(const OfflineDataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out << "v1;task=" << ds.task.name
        << ";kind=" << (ds.task.kind == TaskKind::discrete ? 'd' : 'c')
        << ";dim=" << ds.task.dim << ";n=" << ds.n()
        << ";normalized=" << (ds.normalized ? 1 : 0);
    if (ds.normalized) {
        out << ";ymin=" << fmt17(ds.y_min_ref) << ";ymax=" << fmt17(ds.y_max_ref);
    }
    out << "\n";
    for (int i = 0; i < ds.n(); ++i) {
        for (int j = 0; j < ds.dim(); ++j) out << fmt17(ds.points(i, j)) << ",";
        out << fmt17(ds.values[i]) << "\n";
    }
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            parts.push_back(s.substr(start));
            break;
        }
        parts.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

std::string header_field(const std::vector<std::string>& fields, const std::string& key) {
    const std::string prefix = key + "=";
    for (const auto& f : fields) {
        if (f.rfind(prefix, 0) == 0) return f.substr(prefix.size());
    }
    throw FormatError("dataset header missing field '" + key + "'");
}

double parse_double(const std::string& s) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw FormatError("bad numeric field '" + s + "'");
    return v;
}

}  // namespace

OfflineDataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("missing dataset file " + path.string());
    std::string header;
    if (!std::getline(in, header)) throw FormatError("empty dataset file " + path.string());
    auto fields = split(header, ';');
    if (fields.empty() || fields[0] != "v1") {
        throw FormatError("unsupported dataset format version in " + path.string());
    }
    OfflineDataset ds;
    const std::string task_name = header_field(fields, "task");
    ds.task = find_task(task_name).spec;
    const std::string kind = header_field(fields, "kind");
    if ((kind == "d") != (ds.task.kind == TaskKind::discrete)) {
        throw FormatError("dataset kind does not match registered task '" + task_name + "'");
    }
    const int dim = static_cast<int>(parse_double(header_field(fields, "dim")));
    if (dim != ds.task.dim) {
        throw FormatError("dataset dim " + std::to_string(dim) + " does not match task dim " +
                          std::to_string(ds.task.dim));
    }
    const int n = static_cast<int>(parse_double(header_field(fields, "n")));
    ds.normalized = header_field(fields, "normalized") == "1";
    ds.f_star_ref = ds.task.f_star;
    if (ds.normalized) {
        ds.y_min_ref = parse_double(header_field(fields, "ymin"));
        ds.y_max_ref = parse_double(header_field(fields, "ymax"));
        ds.f_star_ref = (ds.task.f_star - ds.y_min_ref) / (ds.y_max_ref - ds.y_min_ref);
    }
    ds.points.resize(n, dim);
    ds.values.resize(n);
    std::string line;
    for (int i = 0; i < n; ++i) {
        if (!std::getline(in, line) || line.empty()) {
            throw FormatError("dataset file truncated at row " + std::to_string(i));
        }
        auto cells = split(line, ',');
        if (static_cast<int>(cells.size()) != dim + 1) {
            throw FormatError("row " + std::to_string(i) + " has " +
                              std::to_string(cells.size()) + " fields, expected " +
                              std::to_string(dim + 1));
        }
        for (int j = 0; j < dim; ++j) ds.points(i, j) = parse_double(cells[j]);
        ds.values[i] = parse_double(cells[dim]);
    }
    return ds;
}

}  // namespace bonet
