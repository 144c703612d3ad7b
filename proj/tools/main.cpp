#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "bonet/baselines.hpp"
#include "bonet/checkpoint.hpp"
#include "bonet/config.hpp"
#include "bonet/harness.hpp"
#include "bonet/rng.hpp"
#include "bonet/theory.hpp"

namespace {

using namespace bonet;

std::filesystem::path default_out_root() {
    if (const char* env = std::getenv("BONET_OUT")) return env;
    return "bonet_out";
}

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    bool deterministic = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "config file (key = value sections)");
    cmd->add_option("--out", flags.out_dir, "output directory");
    cmd->add_option("--seed", flags.seed, "master seed override")
        ->each([&flags](const std::string&) { flags.seed_set = true; });
    cmd->add_option("--threads", flags.threads, "worker threads for batch gradients");
    cmd->add_flag("--deterministic", flags.deterministic,
                  "force single-threaded, bit-reproducible execution");
}

RunConfig resolve_config(const CommonFlags& flags, const std::string& task) {
    RunConfig cfg = flags.config_path.empty() ? default_config(task)
                                              : load_config_file(flags.config_path);
    if (flags.seed_set) cfg.seed = flags.seed;
    if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
    else if (flags.config_path.empty()) cfg.out_dir = default_out_root();
    if (flags.threads > 0) cfg.threads = flags.threads;
    if (flags.deterministic) cfg.threads = 1;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"generative pretraining for offline black-box optimization"};
    app.require_subcommand(1);

    std::string task = "branin";

    CommonFlags gen_flags;
    auto* gen = app.add_subcommand("gen-data", "sample an offline dataset and save it");
    gen->add_option("--task", task, "registered task name");
    add_common(gen, gen_flags);

    CommonFlags trajs_flags;
    auto* trajs = app.add_subcommand("build-trajs", "turn a dataset into sorted trajectories");
    trajs->add_option("--task", task, "registered task name");
    add_common(trajs, trajs_flags);

    CommonFlags train_flags;
    auto* train_cmd = app.add_subcommand("train", "fit the sequence model on trajectories");
    train_cmd->add_option("--task", task, "registered task name");
    add_common(train_cmd, train_flags);

    CommonFlags roll_flags;
    auto* roll = app.add_subcommand("rollout", "generate and score candidate points");
    roll->add_option("--task", task, "registered task name");
    add_common(roll, roll_flags);

    CommonFlags base_flags;
    std::string baseline_kind = "grad-ascent";
    double hypercube_width = 0.01;
    auto* baseline = app.add_subcommand("baseline", "reference optimizers");
    baseline->add_option("kind", baseline_kind, "grad-ascent | hypercube")->required();
    baseline->add_option("--task", task, "registered task name");
    baseline->add_option("--width", hypercube_width, "hypercube half-width fraction");
    add_common(baseline, base_flags);

    CommonFlags gp_flags;
    int gp_runs = 10;
    auto* gp = app.add_subcommand("gp-observe",
                                  "online GP-EI runs on the synthetic functions");
    gp->add_option("--runs", gp_runs, "seeded runs per function");
    add_common(gp, gp_flags);

    CommonFlags theory_flags;
    long theory_samples = 1000000;
    auto* theory = app.add_subcommand("check-theory",
                                      "Monte-Carlo eps-high volume reports");
    theory->add_option("--samples", theory_samples, "samples per estimate");
    add_common(theory, theory_flags);

    CommonFlags ablate_flags;
    std::string ablate_name;
    std::vector<std::string> ablate_values;
    int ablate_seeds = 5;
    auto* ablate = app.add_subcommand("ablate", "parameter sweep over seeds");
    ablate->add_option("name", ablate_name, "sweep name")->required();
    ablate->add_option("--values", ablate_values, "sweep values (default per name)");
    ablate->add_option("--seeds", ablate_seeds, "number of seeds");
    ablate->add_option("--task", task, "registered task name");
    add_common(ablate, ablate_flags);

    CommonFlags repro_flags;
    std::string repro_target;
    int repro_seeds = 5;
    bool repro_reduced = false;
    auto* repro = app.add_subcommand("reproduce", "end-to-end comparison runs");
    repro->add_option("target", repro_target, "experiment name (branin)")->required();
    repro->add_option("--seeds", repro_seeds, "number of seeds");
    repro->add_flag("--reduced", repro_reduced, "4-layer / 64-wide model");
    add_common(repro, repro_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        if (code != 0) std::cerr << app.help();
        return code;
    }

    try {
        if (gen->parsed()) {
            RunConfig cfg = resolve_config(gen_flags, task);
            RunPaths paths{cfg.out_dir};
            OfflineDataset ds = phase_dataset(cfg, paths);
            std::cout << "wrote " << paths.dataset().string() << " (" << ds.n() << " points, best "
                      << ds.values.maxCoeff() << ")\n";
        } else if (trajs->parsed()) {
            RunConfig cfg = resolve_config(trajs_flags, task);
            RunPaths paths{cfg.out_dir};
            TrajectoryDataset td = phase_trajs(cfg, paths);
            std::cout << "wrote " << paths.trajs().string() << " (" << td.num_trajs()
                      << " trajectories of length " << td.T << ")\n";
        } else if (train_cmd->parsed()) {
            RunConfig cfg = resolve_config(train_flags, task);
            RunPaths paths{cfg.out_dir};
            phase_train(cfg, paths);
            std::cout << "wrote " << paths.checkpoint().string() << "\n";
        } else if (roll->parsed()) {
            RunConfig cfg = resolve_config(roll_flags, task);
            RunPaths paths{cfg.out_dir};
            RolloutResult result = phase_rollout(cfg, paths);
            std::cout << "best " << result.best_value << " median " << result.median_value
                      << " queries " << result.queries_used << "\n";
        } else if (baseline->parsed()) {
            RunConfig cfg = resolve_config(base_flags, task);
            RunPaths paths{cfg.out_dir};
            const Task& t = find_task(cfg.task);
            OfflineDataset ds = std::filesystem::exists(paths.dataset())
                                    ? load_dataset(paths.dataset())
                                    : phase_dataset(cfg, paths);
            if (baseline_kind == "grad-ascent") {
                GradAscentResult result = grad_ascent_baseline(
                    ds, t, 64, 0.1, 2, seed_stream(cfg.seed, "grad_ascent"));
                std::cout << "grad-ascent best " << result.best_value << "\n";
            } else if (baseline_kind == "hypercube") {
                auto values = random_hypercube_baseline(ds, t, hypercube_width,
                                                        cfg.rollout.query_budget,
                                                        seed_stream(cfg.seed, "hypercube"));
                std::cout << "hypercube best "
                          << *std::max_element(values.begin(), values.end()) << "\n";
            } else {
                std::cerr << "unknown baseline kind '" << baseline_kind << "'\n";
                return 1;
            }
        } else if (gp->parsed()) {
            RunConfig cfg = resolve_config(gp_flags, "branin");
            std::filesystem::create_directories(cfg.out_dir);
            for (const std::string& name : {"branin", "goldstein_price_neg", "sixhump_neg"}) {
                for (int run = 0; run < gp_runs; ++run) {
                    auto values = gp_ei_run(find_task(name), {},
                                            seed_stream(cfg.seed, "gp_" + name, run));
                    emit_series_csv(values, "iter,value,best_so_far",
                                    cfg.out_dir /
                                        (name + "_run" + std::to_string(run) + ".csv"));
                }
            }
            std::cout << "wrote GP-EI observation CSVs under " << cfg.out_dir.string() << "\n";
        } else if (theory->parsed()) {
            RunConfig cfg = resolve_config(theory_flags, "branin");
            std::filesystem::create_directories(cfg.out_dir);
            nlohmann::json reports = nlohmann::json::array();
            Box unit1{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)};
            reports.push_back(
                eps_high_measure([](const Eigen::VectorXd& x) { return x[0]; }, unit1, 0.75,
                                 theory_samples, seed_stream(cfg.seed, "theory", 0))
                    .to_json());
            reports.push_back(
                eps_high_measure(
                    [](const Eigen::VectorXd& x) { return 1.0 - 2.0 * std::abs(x[0] - 0.5); },
                    unit1, 0.6, theory_samples, seed_stream(cfg.seed, "theory", 1))
                    .to_json());
            Box unit2{Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2)};
            reports.push_back(
                eps_high_measure(
                    [](const Eigen::VectorXd& x) { return x[0] + 0.1 * x[1]; }, unit2, 0.75,
                    theory_samples, seed_stream(cfg.seed, "theory", 2))
                    .to_json());
            write_json(reports, cfg.out_dir / "theory.json");
            std::cout << "wrote " << (cfg.out_dir / "theory.json").string() << "\n";
        } else if (ablate->parsed()) {
            RunConfig cfg = resolve_config(ablate_flags, task);
            if (ablate_values.empty()) ablate_values = default_ablation_values(ablate_name);
            const auto out_csv = cfg.out_dir / (ablate_name + ".csv");
            std::filesystem::create_directories(cfg.out_dir);
            run_ablation(ablate_name, cfg, ablate_values, ablate_seeds, out_csv);
            std::cout << "wrote " << out_csv.string() << "\n";
        } else if (repro->parsed()) {
            if (repro_target != "branin") {
                std::cerr << "unknown reproduce target '" << repro_target << "'\n";
                return 1;
            }
            RunConfig cfg = resolve_config(repro_flags, "branin");
            nlohmann::json summary =
                reproduce_branin(cfg, repro_seeds, repro_reduced, cfg.out_dir);
            std::cout << summary.dump(2) << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
