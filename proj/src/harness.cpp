#include "bonet/harness.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "bonet/baselines.hpp"
#include "bonet/checkpoint.hpp"
#include "bonet/errors.hpp"
#include "bonet/rng.hpp"

namespace bonet {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::uint64_t file_checksum(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot checksum missing file " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
    }
    return h;
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << "\n";
}

OfflineDataset phase_dataset(const RunConfig& cfg, const RunPaths& paths) {
    const Task& task = find_task(cfg.task);
    OfflineDataset ds = generate_offline(task, cfg.dataset.n_raw, cfg.dataset.cut_fraction,
                                         seed_stream(cfg.seed, "dataset"));
    if (cfg.dataset.noise_scale > 0.0) {
        ds = add_value_noise(ds, cfg.dataset.noise_scale, seed_stream(cfg.seed, "noise"));
    }
    if (cfg.dataset.withhold_fraction > 0.0) {
        ds = withhold(ds, cfg.dataset.withhold_fraction, cfg.dataset.withhold_mode,
                      seed_stream(cfg.seed, "withhold"));
    }
    if (cfg.dataset.normalize) {
        ds = normalize_values(ds, cfg.dataset.norm_y_min, cfg.dataset.norm_y_max);
    }
    std::filesystem::create_directories(paths.root);
    save_dataset(ds, paths.dataset());
    return ds;
}

TrajectoryDataset phase_trajs(const RunConfig& cfg, const RunPaths& paths) {
    OfflineDataset ds = load_dataset(paths.dataset());
    TrajectoryDataset td = build_traj_dataset(ds, cfg.sortsample, seed_stream(cfg.seed, "trajs"));
    save_trajs(td, paths.trajs());
    return td;
}

Model<float> phase_train(const RunConfig& cfg, const RunPaths& paths) {
    TrajectoryDataset td = load_trajs(paths.trajs());
    Model<float> model = init_model<float>(cfg.model, seed_stream(cfg.seed, "init"));
    TrainConfig train_cfg = cfg.train;
    train_cfg.seed = seed_stream(cfg.seed, "train");
    train_cfg.out_dir = paths.root;
    train_cfg.threads = cfg.threads;
    train(model, td, train_cfg);
    return model;
}

RolloutResult phase_rollout(const RunConfig& cfg, const RunPaths& paths) {
    const Task& task = find_task(cfg.task);
    OfflineDataset ds = load_dataset(paths.dataset());
    Model<float> model = load_checkpoint(paths.checkpoint());
    RolloutConfig rcfg = cfg.rollout;
    rcfg.seed = seed_stream(cfg.seed, "rollout");
    rcfg.prefix_sampler = cfg.sortsample;
    RolloutResult result = evaluate(model, ds, task, rcfg);
    write_json(result.to_json(rcfg), paths.result());
    return result;
}

RolloutResult run_pipeline(const RunConfig& cfg, const RunPaths& paths) {
    cfg.validate();
    nlohmann::json record;
    record["config"] = cfg.to_json();
    record["config_hash"] = cfg.config_hash();

    auto t0 = Clock::now();
    phase_dataset(cfg, paths);
    record["phases"]["dataset"] = {{"path", paths.dataset().string()},
                                   {"checksum", file_checksum(paths.dataset())},
                                   {"seconds", seconds_since(t0)}};
    t0 = Clock::now();
    phase_trajs(cfg, paths);
    record["phases"]["trajs"] = {{"path", paths.trajs().string()},
                                 {"checksum", file_checksum(paths.trajs())},
                                 {"seconds", seconds_since(t0)}};
    t0 = Clock::now();
    phase_train(cfg, paths);
    record["phases"]["train"] = {{"path", paths.checkpoint().string()},
                                 {"checksum", file_checksum(paths.checkpoint())},
                                 {"seconds", seconds_since(t0)}};
    t0 = Clock::now();
    RolloutResult result = phase_rollout(cfg, paths);
    record["phases"]["rollout"] = {{"path", paths.result().string()},
                                   {"checksum", file_checksum(paths.result())},
                                   {"seconds", seconds_since(t0)}};
    write_json(record, paths.record());
    return result;
}

nlohmann::json reproduce_branin(RunConfig base, int seeds, bool reduced,
                                const std::filesystem::path& out_dir) {
    if (base.task != "branin") throw ConfigError("reproduce: only the branin recipe is built in");
    if (reduced) {
        base.model.n_layers = 4;
        base.model.embed_dim = 64;
    }
    const Task& task = find_task(base.task);

    std::vector<double> bonet_best, grad_best, dataset_best;
    nlohmann::json per_seed = nlohmann::json::array();
    for (int s = 0; s < seeds; ++s) {
        RunConfig cfg = base;
        cfg.seed = seed_stream(base.seed, "run", s);
        RunPaths paths{out_dir / ("seed" + std::to_string(s))};
        RolloutResult result = run_pipeline(cfg, paths);
        OfflineDataset ds = load_dataset(paths.dataset());
        GradAscentResult ga =
            grad_ascent_baseline(ds, task, 64, 0.1, 2, seed_stream(cfg.seed, "grad_ascent"));
        bonet_best.push_back(result.best_value);
        grad_best.push_back(ga.best_value);
        dataset_best.push_back(ds.values.maxCoeff());
        per_seed.push_back({{"seed", s},
                            {"dataset_best", dataset_best.back()},
                            {"bonet_best", result.best_value},
                            {"bonet_median", result.median_value},
                            {"grad_ascent_best", ga.best_value},
                            {"queries_used", result.queries_used}});
    }

    auto mean = [](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    };
    auto stddev = [&](const std::vector<double>& v) {
        const double m = mean(v);
        double sq = 0.0;
        for (double x : v) sq += (x - m) * (x - m);
        return v.size() > 1 ? std::sqrt(sq / (v.size() - 1)) : 0.0;
    };

    nlohmann::json summary;
    summary["task"] = "branin";
    summary["optima"] = task.spec.f_star;
    summary["seeds"] = seeds;
    summary["reduced_model"] = reduced;
    summary["dataset_best"] = {{"mean", mean(dataset_best)}};
    summary["bonet"] = {{"mean_best", mean(bonet_best)}, {"std_best", stddev(bonet_best)}};
    summary["grad_ascent"] = {{"mean_best", mean(grad_best)}, {"std_best", stddev(grad_best)}};
    summary["per_seed"] = std::move(per_seed);
    std::filesystem::create_directories(out_dir);
    write_json(summary, out_dir / "summary.json");
    return summary;
}

const std::vector<std::string>& ablation_names() {
    static const std::vector<std::string> names = {
        "k_tau",    "nbins",        "prefix_len", "rhat",  "rb_mode",    "strategy",
        "query_budget", "ymax",     "dataset_size", "noise", "model_size"};
    return names;
}

std::vector<std::string> default_ablation_values(const std::string& name) {
    if (name == "k_tau") return {"0.01:10", "0.03:10", "0.1:10", "0.03:50"};
    if (name == "nbins") return {"1", "8", "32", "64"};
    if (name == "prefix_len") return {"4", "8", "16", "32"};
    if (name == "rhat") return {"0", "0.01", "0.05", "0.1", "0.5", "1.0"};
    if (name == "rb_mode") return {"fixed", "update", "update_guarded"};
    if (name == "strategy") return {"random", "random_sorted", "reweight_partial", "reweight_sorted"};
    if (name == "query_budget") return {"32", "64", "96", "128"};
    if (name == "ymax") return {"-6", "-4", "-2", "-0.397887"};
    if (name == "dataset_size") return {"50", "500", "5000"};
    if (name == "noise") return {"0", "0.02", "0.2", "1.0"};
    if (name == "model_size") return {"1", "2", "4", "8"};
    throw ConfigError("unknown ablation '" + name + "'");
}

namespace {

// rhat, prefix_len, rb_mode and query_budget only touch the rollout phase;
// the trained model is reused across those sweep values.
bool rollout_only(const std::string& name) {
    return name == "rhat" || name == "prefix_len" || name == "rb_mode" ||
           name == "query_budget";
}

// k_tau is handled by the runner itself: its values are relative
// (K fraction of N, tau percentile) and need the concrete dataset.
void apply_ablation_value(const std::string& name, const std::string& value, RunConfig& cfg) {
    auto as_num = [&value]() { return std::strtod(value.c_str(), nullptr); };
    if (name == "nbins") {
        cfg.sortsample.n_bins = static_cast<int>(as_num());
    } else if (name == "prefix_len") {
        cfg.rollout.prefix_len = static_cast<int>(as_num());
    } else if (name == "rhat") {
        cfg.rollout.rb_values = {as_num()};
    } else if (name == "rb_mode") {
        cfg.rollout.rb_mode = rb_mode_from_string(value);
    } else if (name == "strategy") {
        cfg.sortsample.strategy = strategy_from_string(value);
    } else if (name == "query_budget") {
        cfg.rollout.query_budget = static_cast<int>(as_num());
    } else if (name == "ymax") {
        cfg.sortsample.f_star = as_num();
    } else if (name == "dataset_size") {
        cfg.dataset.n_raw = static_cast<int>(as_num());
    } else if (name == "noise") {
        cfg.dataset.noise_scale = as_num();
    } else if (name == "model_size") {
        cfg.model.n_layers = static_cast<int>(as_num());
    } else {
        throw ConfigError("unknown ablation '" + name + "'");
    }
}

}  // namespace

void run_ablation(const std::string& name, const RunConfig& base,
                  const std::vector<std::string>& values, int seeds,
                  const std::filesystem::path& out_csv) {
    if (values.empty()) throw ConfigError("run_ablation: empty sweep");
    std::filesystem::create_directories(out_csv.parent_path().empty()
                                            ? std::filesystem::path(".")
                                            : out_csv.parent_path());
    std::ofstream out(out_csv);
    if (!out) throw FormatError("cannot open " + out_csv.string() + " for writing");
    out << "value,seed,best,median,queries_used\n";

    const std::filesystem::path work = out_csv.parent_path() / (name + "_cells");
    for (int s = 0; s < seeds; ++s) {
        bool have_model = false;
        for (const auto& value : values) {
            RunConfig cfg = base;
            cfg.seed = seed_stream(base.seed, "ablate_seed", s);
            RunPaths paths{work / ("seed" + std::to_string(s))};

            RolloutResult result;
            if (name == "k_tau") {
                const auto colon = value.find(':');
                if (colon == std::string::npos) {
                    throw ConfigError("k_tau value must be kfrac:taupct");
                }
                const double k_frac = std::strtod(value.substr(0, colon).c_str(), nullptr);
                const double tau_pct = std::strtod(value.substr(colon + 1).c_str(), nullptr);
                OfflineDataset ds = phase_dataset(cfg, paths);
                const double f_star = std::max(ds.f_star_ref, ds.values.maxCoeff());
                cfg.sortsample.K = k_frac * ds.n();
                cfg.sortsample.tau = std::max(regret_percentile(ds, tau_pct, f_star), 1e-8);
                phase_trajs(cfg, paths);
                phase_train(cfg, paths);
                result = phase_rollout(cfg, paths);
            } else if (rollout_only(name) && have_model) {
                apply_ablation_value(name, value, cfg);
                result = phase_rollout(cfg, paths);
            } else {
                apply_ablation_value(name, value, cfg);
                result = run_pipeline(cfg, paths);
                have_model = true;
            }
            out << value << "," << s << "," << result.best_value << ","
                << result.median_value << "," << result.queries_used << "\n";
            out.flush();
        }
    }
}

void emit_hist_csv(const OfflineDataset& ds, const TrajectoryDataset& td, int n_bins,
                   const std::filesystem::path& out_csv) {
    double lo = ds.values.minCoeff();
    double hi = ds.values.maxCoeff();
    for (const auto& traj : td.trajectories) {
        lo = std::min(lo, traj.values.minCoeff());
        hi = std::max(hi, traj.values.maxCoeff());
    }
    const double width = (hi - lo) / n_bins;
    std::vector<long> count_ds(n_bins, 0), count_traj(n_bins, 0);
    auto bin_of = [&](double v) {
        if (width <= 0.0) return 0;
        return std::min(n_bins - 1, std::max(0, static_cast<int>((v - lo) / width)));
    };
    for (int i = 0; i < ds.n(); ++i) ++count_ds[bin_of(ds.values[i])];
    for (const auto& traj : td.trajectories) {
        for (int t = 0; t < traj.values.size(); ++t) ++count_traj[bin_of(traj.values[t])];
    }
    std::ofstream out(out_csv);
    if (!out) throw FormatError("cannot open " + out_csv.string() + " for writing");
    out << "bin_lo,bin_hi,count_dataset,count_trajectories\n";
    for (int b = 0; b < n_bins; ++b) {
        out << lo + b * width << "," << lo + (b + 1) * width << "," << count_ds[b] << ","
            << count_traj[b] << "\n";
    }
}

void emit_pairs_csv(const std::vector<std::pair<double, double>>& pairs,
                    const std::string& header, const std::filesystem::path& out_csv) {
    std::ofstream out(out_csv);
    if (!out) throw FormatError("cannot open " + out_csv.string() + " for writing");
    out << header << "\n";
    for (const auto& [a, b] : pairs) out << a << "," << b << "\n";
}

void emit_series_csv(const std::vector<double>& values, const std::string& header,
                     const std::filesystem::path& out_csv) {
    std::ofstream out(out_csv);
    if (!out) throw FormatError("cannot open " + out_csv.string() + " for writing");
    out << header << "\n";
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < values.size(); ++i) {
        best = std::max(best, values[i]);
        out << i << "," << values[i] << "," << best << "\n";
    }
}

}  // namespace bonet
