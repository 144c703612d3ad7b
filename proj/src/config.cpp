#include "bonet/config.hpp"

#include <fstream>
#include <sstream>

#include "bonet/errors.hpp"
#include "bonet/functions.hpp"

namespace bonet {

void RunConfig::validate() const {
    find_task(task);
    model.validate();
    train.validate();
    rollout.validate();
    if (sortsample.T != model.max_timestep) {
        throw ConfigError("config: trajectory length must match the model max_timestep");
    }
    if (rollout.total_len != sortsample.T) {
        throw ConfigError("config: rollout total_len must match the trajectory length");
    }
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["task"] = task;
    j["seed"] = seed;
    j["threads"] = threads;
    j["dataset"] = {{"n_raw", dataset.n_raw},
                    {"cut_fraction", dataset.cut_fraction},
                    {"noise_scale", dataset.noise_scale},
                    {"withhold_fraction", dataset.withhold_fraction},
                    {"withhold_mode",
                     dataset.withhold_mode == WithholdMode::top ? "top" : "random"},
                    {"normalize", dataset.normalize},
                    {"norm_y_min", dataset.norm_y_min},
                    {"norm_y_max", dataset.norm_y_max}};
    nlohmann::json ss = {{"T", sortsample.T},
                         {"n_bins", sortsample.n_bins},
                         {"num_trajs", sortsample.num_trajs},
                         {"strategy", strategy_to_string(sortsample.strategy)}};
    if (sortsample.K) ss["K"] = *sortsample.K;
    if (sortsample.tau) ss["tau"] = *sortsample.tau;
    if (sortsample.f_star) ss["f_star"] = *sortsample.f_star;
    j["sortsample"] = std::move(ss);
    j["model"] = {{"embed_dim", model.embed_dim},
                  {"n_heads", model.n_heads},
                  {"n_layers", model.n_layers},
                  {"context_len", model.context_len},
                  {"max_timestep", model.max_timestep},
                  {"head_variance", model.head_variance}};
    j["train"] = {{"batch_size", train.batch_size},
                  {"learning_rate", train.learning_rate},
                  {"epochs", train.epochs},
                  {"grad_clip_norm", train.grad_clip_norm ? nlohmann::json(*train.grad_clip_norm)
                                                          : nlohmann::json()},
                  {"checkpoint_every", train.checkpoint_every}};
    j["rollout"] = {{"prefix_len", rollout.prefix_len},
                    {"total_len", rollout.total_len},
                    {"rb_values", rollout.rb_values},
                    {"rb_mode", rb_mode_to_string(rollout.rb_mode)},
                    {"query_budget", rollout.query_budget},
                    {"decode", rollout.decode == DecodeMode::greedy ? "greedy" : "sample"},
                    {"temperature", rollout.temperature}};
    return j;
}

std::uint64_t RunConfig::config_hash() const {
    const std::string dump = to_json().dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

RunConfig default_config(const std::string& task_name) {
    const Task& task = find_task(task_name);
    RunConfig cfg;
    cfg.task = task_name;
    cfg.model.kind = task.spec.kind;
    cfg.model.dim = task.spec.dim;
    cfg.model.vocab = task.spec.vocab;

    if (task.spec.kind == TaskKind::discrete) {
        // desk-scale defaults for the synthetic discrete task
        cfg.dataset.n_raw = 5000;
        cfg.dataset.cut_fraction = 0.1;
        cfg.sortsample = SortSampleParams{};
        cfg.sortsample.T = 64;
        cfg.sortsample.n_bins = 32;
        cfg.sortsample.num_trajs = 200;
        cfg.model.embed_dim = 64;
        cfg.model.n_heads = 4;
        cfg.model.n_layers = 4;
        cfg.model.context_len = 32;
        cfg.model.max_timestep = 64;
        cfg.train.epochs = 30;
        cfg.rollout.prefix_len = 32;
        cfg.rollout.total_len = 64;
        cfg.rollout.query_budget = 128;
        return cfg;
    }

    cfg.dataset.n_raw = 5000;
    cfg.dataset.cut_fraction = 0.1;
    cfg.sortsample.T = 64;
    cfg.sortsample.n_bins = 32;
    cfg.sortsample.num_trajs = 400;
    cfg.model.embed_dim = 128;
    cfg.model.n_heads = 4;
    cfg.model.n_layers = 8;
    cfg.model.context_len = 32;
    cfg.model.max_timestep = 64;
    cfg.train.epochs = 75;
    cfg.rollout.prefix_len = 32;
    cfg.rollout.total_len = 64;
    cfg.rollout.query_budget = 128;
    return cfg;
}

namespace {

bool parse_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ConfigError("bad boolean value '" + v + "'");
}

double parse_num(const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0') throw ConfigError("bad numeric value '" + v + "'");
    return x;
}

std::vector<double> parse_list(const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_num(item));
    return out;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

void apply_config_line(RunConfig& cfg, const std::string& section, const std::string& key,
                       const std::string& value) {
    const std::string where = section + "." + key;
    if (section == "run") {
        if (key == "task") {
            cfg.task = value;
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(parse_num(value));
        } else if (key == "out_dir") {
            cfg.out_dir = value;
        } else if (key == "threads") {
            cfg.threads = static_cast<int>(parse_num(value));
        } else {
            throw ConfigError("unknown config key '" + where + "'");
        }
    } else if (section == "dataset") {
        if (key == "n_raw") cfg.dataset.n_raw = static_cast<int>(parse_num(value));
        else if (key == "cut_fraction") cfg.dataset.cut_fraction = parse_num(value);
        else if (key == "noise_scale") cfg.dataset.noise_scale = parse_num(value);
        else if (key == "withhold_fraction") cfg.dataset.withhold_fraction = parse_num(value);
        else if (key == "withhold_mode")
            cfg.dataset.withhold_mode = value == "top" ? WithholdMode::top : WithholdMode::random;
        else if (key == "normalize") cfg.dataset.normalize = parse_bool(value);
        else if (key == "norm_y_min") cfg.dataset.norm_y_min = parse_num(value);
        else if (key == "norm_y_max") cfg.dataset.norm_y_max = parse_num(value);
        else throw ConfigError("unknown config key '" + where + "'");
    } else if (section == "sortsample") {
        if (key == "T") cfg.sortsample.T = static_cast<int>(parse_num(value));
        else if (key == "n_bins") cfg.sortsample.n_bins = static_cast<int>(parse_num(value));
        else if (key == "num_trajs") cfg.sortsample.num_trajs = static_cast<int>(parse_num(value));
        else if (key == "strategy") cfg.sortsample.strategy = strategy_from_string(value);
        else if (key == "K") cfg.sortsample.K = parse_num(value);
        else if (key == "tau") cfg.sortsample.tau = parse_num(value);
        else if (key == "f_star") cfg.sortsample.f_star = parse_num(value);
        else throw ConfigError("unknown config key '" + where + "'");
    } else if (section == "model") {
        if (key == "embed_dim") cfg.model.embed_dim = static_cast<int>(parse_num(value));
        else if (key == "n_heads") cfg.model.n_heads = static_cast<int>(parse_num(value));
        else if (key == "n_layers") cfg.model.n_layers = static_cast<int>(parse_num(value));
        else if (key == "context_len") cfg.model.context_len = static_cast<int>(parse_num(value));
        else if (key == "max_timestep") cfg.model.max_timestep = static_cast<int>(parse_num(value));
        else if (key == "head_variance") cfg.model.head_variance = parse_num(value);
        else throw ConfigError("unknown config key '" + where + "'");
    } else if (section == "train") {
        if (key == "batch_size") cfg.train.batch_size = static_cast<int>(parse_num(value));
        else if (key == "learning_rate") cfg.train.learning_rate = parse_num(value);
        else if (key == "epochs") cfg.train.epochs = static_cast<int>(parse_num(value));
        else if (key == "grad_clip_norm") {
            const double v = parse_num(value);
            cfg.train.grad_clip_norm = v > 0.0 ? std::optional<double>(v) : std::nullopt;
        } else if (key == "checkpoint_every") {
            cfg.train.checkpoint_every = static_cast<int>(parse_num(value));
        } else {
            throw ConfigError("unknown config key '" + where + "'");
        }
    } else if (section == "rollout") {
        if (key == "prefix_len") cfg.rollout.prefix_len = static_cast<int>(parse_num(value));
        else if (key == "total_len") cfg.rollout.total_len = static_cast<int>(parse_num(value));
        else if (key == "rb_values") cfg.rollout.rb_values = parse_list(value);
        else if (key == "rb_mode") cfg.rollout.rb_mode = rb_mode_from_string(value);
        else if (key == "query_budget") cfg.rollout.query_budget = static_cast<int>(parse_num(value));
        else if (key == "decode")
            cfg.rollout.decode = value == "sample" ? DecodeMode::sample : DecodeMode::greedy;
        else if (key == "temperature") cfg.rollout.temperature = parse_num(value);
        else throw ConfigError("unknown config key '" + where + "'");
    } else {
        throw ConfigError("unknown config section '" + section + "'");
    }
}

RunConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());

    // first pass pulls the task so the right defaults seed the config
    std::string task_name = "branin";
    {
        std::string line, section;
        while (std::getline(in, line)) {
            line = trim(line);
            if (line.empty() || line[0] == '#') continue;
            if (line.front() == '[' && line.back() == ']') {
                section = line.substr(1, line.size() - 2);
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            if (section == "run" && trim(line.substr(0, eq)) == "task") {
                task_name = trim(line.substr(eq + 1));
            }
        }
    }
    RunConfig cfg = default_config(task_name);

    in.clear();
    in.seekg(0);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                              ": expected key = value");
        }
        apply_config_line(cfg, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    // keep dependent lengths coherent when only one side was overridden
    cfg.model.max_timestep = cfg.sortsample.T;
    cfg.rollout.total_len = cfg.sortsample.T;
    return cfg;
}

}  // namespace bonet
