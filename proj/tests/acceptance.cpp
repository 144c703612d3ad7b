// End-to-end acceptance suite. Each test case prints one PASS/FAIL line.
// Trained pipelines are cached under the work directory and shared between
// criteria, so reruns only pay for what is missing.
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include "bonet/baselines.hpp"
#include "bonet/checkpoint.hpp"
#include "bonet/config.hpp"
#include "bonet/harness.hpp"
#include "bonet/rng.hpp"
#include "bonet/theory.hpp"
#include "bonet/train.hpp"

using namespace bonet;

namespace {

constexpr std::uint64_t kMasterSeed = 1;
constexpr int kSeeds = 5;

std::filesystem::path work_dir() {
    if (const char* env = std::getenv("BONET_ACCEPT_DIR")) return env;
    return std::filesystem::path(ACCEPTANCE_WORK_DIR);
}

int worker_threads() {
    if (const char* env = std::getenv("BONET_THREADS")) return std::max(1, std::atoi(env));
    return 1;
}

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("ACCEPTANCE CRITERION %d: %s (%s)\n", criterion, pass ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
}

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double sample_std(const std::vector<double>& v) {
    const double m = mean(v);
    double sq = 0.0;
    for (double x : v) sq += (x - m) * (x - m);
    return v.size() > 1 ? std::sqrt(sq / (v.size() - 1)) : 0.0;
}

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    auto ranks = [](const std::vector<double>& v) {
        const std::size_t n = v.size();
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return v[a] < v[b]; });
        std::vector<double> rank(n);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
            const double avg = 0.5 * (i + j) + 1.0;  // average rank for ties
            for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
            i = j + 1;
        }
        return rank;
    };
    const std::vector<double> rx = ranks(xs), ry = ranks(ys);
    const double mx = mean(rx), my = mean(ry);
    double num = 0.0, dx = 0.0, dy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    return num / std::sqrt(dx * dy);
}

// Branin headline configuration: the pinned experiment with the permitted
// reduced-size model (4 layers, embed 64).
RunConfig branin_config(int seed_index) {
    RunConfig cfg = default_config("branin");
    cfg.model.n_layers = 4;
    cfg.model.embed_dim = 64;
    cfg.seed = seed_stream(kMasterSeed, "run", seed_index);
    cfg.threads = worker_threads();
    return cfg;
}

// Runs the full pipeline unless a finished run with the same config hash is
// already cached.
RunPaths ensure_pipeline(const RunConfig& cfg, const std::filesystem::path& dir) {
    RunPaths paths{dir};
    if (std::filesystem::exists(paths.record())) {
        try {
            std::ifstream in(paths.record());
            nlohmann::json record = nlohmann::json::parse(in);
            if (record.at("config_hash").get<std::uint64_t>() == cfg.config_hash() &&
                std::filesystem::exists(paths.checkpoint()) &&
                std::filesystem::exists(paths.result())) {
                return paths;
            }
        } catch (...) {
        }
    }
    std::filesystem::remove_all(dir);
    run_pipeline(cfg, paths);
    return paths;
}

RunPaths branin_run(int seed_index) {
    return ensure_pipeline(branin_config(seed_index),
                           work_dir() / "branin" / ("seed" + std::to_string(seed_index)));
}

struct BraninSummary {
    std::vector<double> best, dataset_best, median;
};

BraninSummary branin_summary() {
    BraninSummary s;
    for (int i = 0; i < kSeeds; ++i) {
        RunPaths paths = branin_run(i);
        std::ifstream in(paths.result());
        nlohmann::json result = nlohmann::json::parse(in);
        s.best.push_back(result.at("summary").at("best_value").get<double>());
        s.median.push_back(result.at("summary").at("median_value").get<double>());
        s.dataset_best.push_back(load_dataset(paths.dataset()).values.maxCoeff());
    }
    return s;
}

// Mean initial regret budget of the cached phase-1 trajectories; sets the
// scale for the budget sweeps.
double mean_initial_budget(const RunPaths& paths) {
    TrajectoryDataset td = load_trajs(paths.trajs());
    double total = 0.0;
    for (const auto& traj : td.trajectories) total += traj.budgets[0];
    return total / td.num_trajs();
}

}  // namespace

TEST_CASE("criterion 1: branin headline band") {
    BraninSummary s = branin_summary();
    const double m = mean(s.best);
    int beat = 0;
    for (int i = 0; i < kSeeds; ++i) {
        if (s.best[i] > s.dataset_best[i]) ++beat;
    }
    const bool pass = m >= -3.0 && m <= -0.9 && beat >= 4;
    char detail[256];
    std::snprintf(detail, sizeof(detail),
                  "mean best %.3f (band [-3.0, -0.9]), std %.3f, beat dataset best on %d/%d seeds",
                  m, sample_std(s.best), beat, kSeeds);
    report(1, pass, detail);
    CHECK(m >= -3.0);
    CHECK(m <= -0.9);
    CHECK(beat >= 4);
}

TEST_CASE("criterion 2: gradient-ascent baseline band") {
    const Task& task = find_task("branin");
    BraninSummary s = branin_summary();
    std::vector<double> ga_best;
    for (int i = 0; i < kSeeds; ++i) {
        RunPaths paths = branin_run(i);
        OfflineDataset ds = load_dataset(paths.dataset());
        GradAscentResult ga = grad_ascent_baseline(
            ds, task, 64, 0.1, 2, seed_stream(branin_config(i).seed, "grad_ascent"));
        ga_best.push_back(ga.best_value);
    }
    const double ga_mean = mean(ga_best);
    const double bonet_mean = mean(s.best);
    const bool pass = ga_mean >= -8.5 && ga_mean <= -1.5 && bonet_mean > ga_mean;
    char detail[256];
    std::snprintf(detail, sizeof(detail),
                  "grad-ascent mean best %.3f (band [-8.5, -1.5]), std %.3f; model mean %.3f",
                  ga_mean, sample_std(ga_best), bonet_mean);
    report(2, pass, detail);
    CHECK(ga_mean >= -8.5);
    CHECK(ga_mean <= -1.5);
    CHECK(bonet_mean > ga_mean);
}

TEST_CASE("criterion 3: online GP-EI proposals trend upward") {
    bool all_pass = true;
    std::string detail;
    for (const std::string& name : {"branin", "goldstein_price_neg", "sixhump_neg"}) {
        const Task& task = find_task(name);
        int improving = 0;
        for (int run = 0; run < 10; ++run) {
            auto values = gp_ei_run(task, {}, seed_stream(kMasterSeed, "gp_" + name, run));
            const std::size_t half = values.size() / 2;
            double first = 0.0, second = 0.0;
            for (std::size_t i = 0; i < half; ++i) first += values[i];
            for (std::size_t i = half; i < values.size(); ++i) second += values[i];
            first /= half;
            second /= values.size() - half;
            if (second > first) ++improving;
        }
        if (improving < 9) all_pass = false;
        detail += name + " " + std::to_string(improving) + "/10  ";
        CHECK(improving >= 9);
    }
    report(3, all_pass, "improving runs: " + detail);
}

TEST_CASE("criterion 4: initial budget tracks realized regret") {
    RunPaths paths = branin_run(0);
    Model<float> model = load_checkpoint(paths.checkpoint());
    OfflineDataset ds = load_dataset(paths.dataset());
    const Task& task = find_task("branin");
    const double scale = mean_initial_budget(paths);

    std::vector<double> r1_values;
    for (int i = 0; i < 10; ++i) r1_values.push_back(scale * (0.05 + 0.15 * i));
    auto pairs = irb_sweep(model, ds, task, r1_values, seed_stream(kMasterSeed, "irb"));
    std::vector<double> r1s, realized;
    for (const auto& [a, b] : pairs) {
        r1s.push_back(a);
        realized.push_back(b);
    }
    const double rho = spearman(r1s, realized);
    const bool pass = rho > 0.8;
    char detail[128];
    std::snprintf(detail, sizeof(detail), "Spearman(R1, realized regret) = %.3f over 10 budgets",
                  rho);
    report(4, pass, detail);
    CHECK(rho > 0.8);
}

TEST_CASE("criterion 5: larger evaluation budgets do not help") {
    const Task& task = find_task("branin");
    int negative = 0;
    std::vector<double> rhos;
    for (int i = 0; i < kSeeds; ++i) {
        RunPaths paths = branin_run(i);
        Model<float> model = load_checkpoint(paths.checkpoint());
        OfflineDataset ds = load_dataset(paths.dataset());
        const double scale = mean_initial_budget(paths);
        const std::vector<double> rhats = {0.0,          0.01,        0.1,
                                           0.05 * scale, 0.25 * scale, scale};
        // one fixed prefix per seed, swept across the budget values
        RunConfig cfg = branin_config(i);
        Prefix prefix = build_prefix(ds, cfg.sortsample, cfg.rollout.prefix_len,
                                     seed_stream(cfg.seed, "rhat_prefix"));
        std::vector<double> bests;
        for (double rhat : rhats) {
            UnrollTrace trace = unroll(model, prefix, rhat, 32, RbMode::fixed, nullptr,
                                       DecodeMode::greedy, 1.0, seed_stream(cfg.seed, "rhat"));
            double best = -std::numeric_limits<double>::infinity();
            for (int k = 0; k < trace.points.rows(); ++k) {
                best = std::max(best, task.oracle(clamp_to_bounds(
                                          task.spec, trace.points.row(k).transpose())));
            }
            bests.push_back(best);
        }
        const double rho = spearman(rhats, bests);
        rhos.push_back(rho);
        if (rho < 0.0) ++negative;
    }
    const bool pass = negative >= 4;
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "negative Spearman(rhat, best) on %d/%d seeds (rho mean %.2f)", negative,
                  kSeeds, mean(rhos));
    report(5, pass, detail);
    CHECK(negative >= 4);
}

TEST_CASE("criterion 6: trajectory construction strategies order correctly") {
    // Same configuration and seeds as the headline runs; the reweight_sorted
    // column comes straight from the criterion-1 cache, the other two
    // strategies retrain on the identical datasets.
    std::map<Strategy, std::vector<double>> best;
    for (int i = 0; i < kSeeds; ++i) {
        for (Strategy strategy :
             {Strategy::random, Strategy::random_sorted, Strategy::reweight_sorted}) {
            RunConfig cfg = branin_config(i);
            cfg.sortsample.strategy = strategy;
            RunPaths paths =
                strategy == Strategy::reweight_sorted
                    ? branin_run(i)
                    : ensure_pipeline(cfg, work_dir() / "strategy" /
                                               (strategy_to_string(strategy) + "_seed" +
                                                std::to_string(i)));
            std::ifstream in(paths.result());
            nlohmann::json result = nlohmann::json::parse(in);
            best[strategy].push_back(result.at("summary").at("best_value").get<double>());
        }
    }
    const double m_random = mean(best[Strategy::random]);
    const double m_sorted = mean(best[Strategy::random_sorted]);
    const double m_reweight = mean(best[Strategy::reweight_sorted]);
    const bool pass = m_reweight >= m_sorted && m_sorted >= m_random;
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "mean best: reweight_sorted %.3f >= random_sorted %.3f >= random %.3f",
                  m_reweight, m_sorted, m_random);
    report(6, pass, detail);
    CHECK(m_reweight >= m_sorted);
    CHECK(m_sorted >= m_random);
}

TEST_CASE("criterion 7: fixed and updated budgets perform alike") {
    const Task& task = find_task("branin");
    std::map<RbMode, std::vector<double>> best;
    for (int i = 0; i < kSeeds; ++i) {
        RunPaths paths = branin_run(i);
        Model<float> model = load_checkpoint(paths.checkpoint());
        OfflineDataset ds = load_dataset(paths.dataset());
        RunConfig cfg = branin_config(i);
        for (RbMode mode : {RbMode::fixed, RbMode::update, RbMode::update_guarded}) {
            RolloutConfig rcfg = cfg.rollout;
            rcfg.rb_mode = mode;
            rcfg.seed = seed_stream(cfg.seed, "rollout");  // same prefixes as criterion 1
            rcfg.prefix_sampler = cfg.sortsample;
            best[mode].push_back(evaluate(model, ds, task, rcfg).best_value);
        }
    }
    const std::vector<RbMode> modes = {RbMode::fixed, RbMode::update, RbMode::update_guarded};
    bool pass = true;
    double worst_gap = 0.0;
    for (std::size_t a = 0; a < modes.size(); ++a) {
        for (std::size_t b = a + 1; b < modes.size(); ++b) {
            const auto& va = best[modes[a]];
            const auto& vb = best[modes[b]];
            const double pooled = std::sqrt(
                0.5 * (sample_std(va) * sample_std(va) + sample_std(vb) * sample_std(vb)));
            const double gap = std::abs(mean(va) - mean(vb));
            worst_gap = std::max(worst_gap, pooled > 0 ? gap / pooled : 0.0);
            if (gap >= pooled) pass = false;
            CHECK(gap < pooled);
        }
    }
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "means fixed %.3f / update %.3f / guarded %.3f, worst gap %.2f pooled std",
                  mean(best[RbMode::fixed]), mean(best[RbMode::update]),
                  mean(best[RbMode::update_guarded]), worst_gap);
    report(7, pass, detail);
}

TEST_CASE("criterion 8: property suite") {
    bool pass = true;
    std::string failures;

    // gradients against central finite differences on the tiny config
    {
        ModelConfig cfg;
        cfg.embed_dim = 8;
        cfg.n_heads = 2;
        cfg.n_layers = 1;
        cfg.context_len = 2;
        cfg.max_timestep = 4;
        cfg.dim = 1;
        Model<double> model = init_model<double>(cfg, 7);
        Rng rng(8);
        WindowBatch<double> batch;
        batch.n_steps = 2;
        batch.n_windows = 2;
        batch.r.resize(2, 2);
        batch.steps.resize(2, 2);
        batch.x.resize(1, 4);
        for (int b = 0; b < 2; ++b) {
            for (int t = 0; t < 2; ++t) {
                batch.r(t, b) = rng.uniform(0.0, 2.0);
                batch.steps(t, b) = t + b;
                batch.x(0, b * 2 + t) = rng.uniform(-1.0, 1.0);
            }
        }
        Targets<double> targets;
        targets.cont.resize(1, 4);
        for (int i = 0; i < 4; ++i) targets.cont(0, i) = rng.uniform(-1.0, 1.0);
        GradResult<double> result = loss_and_grad(model, batch, targets);
        std::vector<Mat<double>*> weights;
        std::vector<const Mat<double>*> grads;
        model.params.visit(
            [&weights](const std::string&, Mat<double>& m) { weights.push_back(&m); });
        result.grads.visit(
            [&grads](const std::string&, const Mat<double>& m) { grads.push_back(&m); });
        double worst = 0.0;
        Rng pick(9);
        for (int k = 0; k < 100; ++k) {
            const std::size_t tensor = pick.uniform_int(weights.size());
            const Eigen::Index idx =
                static_cast<Eigen::Index>(pick.uniform_int(weights[tensor]->size()));
            double& w = weights[tensor]->data()[idx];
            const double saved = w;
            const double eps = 1e-4;
            w = saved + eps;
            const double up = mse_loss(forward(model, batch), targets.cont);
            w = saved - eps;
            const double down = mse_loss(forward(model, batch), targets.cont);
            w = saved;
            const double fd = (up - down) / (2.0 * eps);
            const double analytic = grads[tensor]->data()[idx];
            const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-8});
            worst = std::max(worst, std::abs(fd - analytic) / denom);
        }
        if (worst >= 1e-4) {
            pass = false;
            failures += "gradcheck ";
        }
        CHECK(worst < 1e-4);

        // causal-mask perturbation invariance
        Eigen::MatrixXd base = forward(model, batch);
        WindowBatch<double> future = batch;
        future.r(1, 0) += 3.0;
        future.x(0, 1) -= 2.0;  // x at timestep 1 of window 0
        Eigen::MatrixXd moved = forward(model, future);
        const bool causal = moved(0, 0) == base(0, 0);
        if (!causal) {
            pass = false;
            failures += "causality ";
        }
        CHECK(causal);
    }

    // allocation sums and budget telescoping
    {
        Rng rng(10);
        bool alloc_ok = true;
        for (int trial = 0; trial < 200; ++trial) {
            const int n_bins = 1 + static_cast<int>(rng.uniform_int(40));
            const int T = 1 + static_cast<int>(rng.uniform_int(200));
            Eigen::VectorXd scores(n_bins);
            for (int i = 0; i < n_bins; ++i) {
                scores[i] = rng.uniform01() < 0.25 ? 0.0 : rng.uniform01();
            }
            if (scores.sum() <= 0.0) scores[0] = 1.0;
            auto counts = allocate_counts(scores, T);
            if (std::accumulate(counts.begin(), counts.end(), 0) != T) alloc_ok = false;
        }
        OfflineDataset ds = generate_offline(find_task("branin"), 1000, 0.10, 11);
        SortSampleParams params;
        params.num_trajs = 20;
        TrajectoryDataset td = build_traj_dataset(ds, params, 12);
        bool telescoping = true;
        for (const auto& traj : td.trajectories) {
            for (int t = 0; t + 1 < td.T; ++t) {
                const double step = traj.budgets[t] - traj.budgets[t + 1];
                const double expected = td.f_star_used - traj.values[t];
                if (std::abs(step - expected) > 1e-9 * std::max(1.0, std::abs(expected))) {
                    telescoping = false;
                }
            }
        }
        if (!alloc_ok || !telescoping) {
            pass = false;
            failures += "sortsample ";
        }
        CHECK(alloc_ok);
        CHECK(telescoping);
    }

    // dataset round trip, bit exact
    {
        OfflineDataset ds = generate_offline(find_task("branin"), 500, 0.10, 13);
        const auto path = work_dir() / "roundtrip.csv";
        std::filesystem::create_directories(work_dir());
        save_dataset(ds, path);
        OfflineDataset back = load_dataset(path);
        const bool exact = back.points == ds.points && back.values == ds.values;
        if (!exact) {
            pass = false;
            failures += "roundtrip ";
        }
        CHECK(exact);
    }

    // eps-high Monte-Carlo conclusion at three sigma on the analytic family
    {
        bool theory_ok = true;
        Box unit1{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)};
        for (double slope : {1.0, 2.0, 5.0}) {
            for (double eps : {0.6, 0.75, 0.9}) {
                EpsHighReport r = eps_high_measure(
                    [slope](const Eigen::VectorXd& x) { return slope * x[0]; }, unit1, eps,
                    1000000, 14);
                if (!r.premise_holds || !(r.vol_h + 3.0 * (r.se_h + r.se_hc) < r.vol_hc)) {
                    theory_ok = false;
                }
            }
        }
        Box unit2{Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2)};
        EpsHighReport plane = eps_high_measure(
            [](const Eigen::VectorXd& x) { return x[0] + 0.1 * x[1]; }, unit2, 0.75, 1000000,
            15);
        if (!plane.premise_holds ||
            !(plane.vol_h + 3.0 * (plane.se_h + plane.se_hc) < plane.vol_hc)) {
            theory_ok = false;
        }
        if (!theory_ok) {
            pass = false;
            failures += "theory ";
        }
        CHECK(theory_ok);
    }

    // deterministic reruns, byte identical artifacts
    {
        RunConfig cfg = default_config("branin");
        cfg.dataset.n_raw = 200;
        cfg.sortsample.T = 8;
        cfg.sortsample.n_bins = 8;
        cfg.sortsample.num_trajs = 10;
        cfg.model.embed_dim = 16;
        cfg.model.n_heads = 2;
        cfg.model.n_layers = 1;
        cfg.model.context_len = 4;
        cfg.model.max_timestep = 8;
        cfg.train.epochs = 2;
        cfg.rollout.prefix_len = 4;
        cfg.rollout.total_len = 8;
        cfg.rollout.query_budget = 8;
        cfg.seed = 16;
        auto read = [](const std::filesystem::path& p) {
            std::ifstream in(p, std::ios::binary);
            return std::string((std::istreambuf_iterator<char>(in)), {});
        };
        RunPaths a{work_dir() / "det_a"}, b{work_dir() / "det_b"};
        std::filesystem::remove_all(a.root);
        std::filesystem::remove_all(b.root);
        run_pipeline(cfg, a);
        run_pipeline(cfg, b);
        const bool identical = read(a.result()) == read(b.result()) &&
                               read(a.checkpoint()) == read(b.checkpoint()) &&
                               read(a.trajs()) == read(b.trajs());
        if (!identical) {
            pass = false;
            failures += "determinism ";
        }
        CHECK(identical);
    }

    report(8, pass, pass ? "gradients, causality, allocation, telescoping, round trip, "
                           "eps-high 3-sigma, deterministic reruns"
                         : "failed: " + failures);
}

TEST_CASE("rollout property: longer prefixes stabilize the best value") {
    // Module invariant, checked on the cached criterion-1 models: with an
    // equal per-trajectory query budget of 32, the across-seed variance of
    // the best value with P=32 stays within the P=4 variance.
    const Task& task = find_task("branin");
    std::vector<double> best_long, best_short;
    for (int i = 0; i < kSeeds; ++i) {
        RunPaths paths = branin_run(i);
        Model<float> model = load_checkpoint(paths.checkpoint());
        OfflineDataset ds = load_dataset(paths.dataset());
        RunConfig cfg = branin_config(i);
        for (int prefix_len : {32, 4}) {
            Prefix prefix = build_prefix(ds, cfg.sortsample, prefix_len,
                                         seed_stream(cfg.seed, "prefix_var"));
            UnrollTrace trace =
                unroll(model, prefix, 0.01, 64 - prefix_len, RbMode::fixed, nullptr,
                       DecodeMode::greedy, 1.0, seed_stream(cfg.seed, "prefix_var_unroll"));
            double best = -std::numeric_limits<double>::infinity();
            for (int k = 0; k < std::min<int>(32, trace.points.rows()); ++k) {
                best = std::max(best, task.oracle(clamp_to_bounds(
                                          task.spec, trace.points.row(k).transpose())));
            }
            (prefix_len == 32 ? best_long : best_short).push_back(best);
        }
    }
    const double var_long = sample_std(best_long) * sample_std(best_long);
    const double var_short = sample_std(best_short) * sample_std(best_short);
    std::printf("PROPERTY prefix variance: P=32 var %.4f <= P=4 var %.4f -> %s\n", var_long,
                var_short, var_long <= var_short ? "PASS" : "FAIL");
    std::fflush(stdout);
    CHECK(var_long <= var_short);
}

TEST_CASE("criterion 9: discrete smoke test stands in for the benchmark tables") {
    // The published benchmark-suite numbers (mean score 0.772, rank 2.4) are
    // out of scope here: those tasks and oracles are not part of this
    // artifact. The discrete path is exercised by the hidden-pattern task.
    const Task& task = find_task("hidden_pattern");
    int beat = 0;
    std::vector<double> bests, ds_bests;
    for (int i = 0; i < kSeeds; ++i) {
        RunConfig cfg = default_config("hidden_pattern");
        cfg.seed = seed_stream(kMasterSeed, "discrete", i);
        cfg.threads = worker_threads();
        RunPaths paths = ensure_pipeline(
            cfg, work_dir() / "discrete" / ("seed" + std::to_string(i)));
        std::ifstream in(paths.result());
        nlohmann::json result = nlohmann::json::parse(in);
        const double best = result.at("summary").at("best_value").get<double>();
        const double ds_best = load_dataset(paths.dataset()).values.maxCoeff();
        bests.push_back(best);
        ds_bests.push_back(ds_best);
        if (best >= ds_best) ++beat;
    }
    const bool pass = beat >= 4;
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "best rollout >= dataset best on %d/%d seeds (mean best %.2f vs %.2f)", beat,
                  kSeeds, mean(bests), mean(ds_bests));
    report(9, pass, detail);
    CHECK(beat >= 4);
}
