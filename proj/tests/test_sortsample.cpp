#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <set>

#include "bonet/errors.hpp"
#include "bonet/rng.hpp"
#include "bonet/sortsample.hpp"

using namespace bonet;

namespace {

OfflineDataset dataset_with_values(std::vector<double> values) {
    OfflineDataset ds;
    ds.task = find_task("branin").spec;
    const int n = static_cast<int>(values.size());
    ds.points.setZero(n, 2);
    ds.values = Eigen::Map<Eigen::VectorXd>(values.data(), n);
    for (int i = 0; i < n; ++i) ds.points(i, 0) = i * 1e-3;  // distinct in-bounds points
    ds.f_star_ref = ds.task.f_star;
    return ds;
}

OfflineDataset branin_dataset(int n_raw = 5000, std::uint64_t seed = 1) {
    return generate_offline(find_task("branin"), n_raw, 0.10, seed);
}

}  // namespace

TEST_CASE("partition_bins splits equal-width intervals") {
    OfflineDataset ds = dataset_with_values({0, 1, 2, 3});
    ds.f_star_ref = 3;
    BinPartition p = partition_bins(ds, 2);
    CHECK(p.members[0] == std::vector<int>{0, 1});
    CHECK(p.members[1] == std::vector<int>{2, 3});
    CHECK(p.edges[1] == doctest::Approx(1.5));

    OfflineDataset ten = dataset_with_values({0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    ten.f_star_ref = 9;
    BinPartition one = partition_bins(ten, 1);
    CHECK(one.members[0].size() == 10);
}

TEST_CASE("partition_bins on the branin dataset") {
    OfflineDataset ds = branin_dataset();
    BinPartition p = partition_bins(ds, 32);
    std::size_t total = 0;
    for (const auto& m : p.members) total += m.size();
    CHECK(total == 4500);
    const double width = (ds.values.maxCoeff() - ds.values.minCoeff()) / 32;
    for (int i = 0; i < 32; ++i) {
        CHECK(p.edges[i + 1] - p.edges[i] == doctest::Approx(width).epsilon(1e-12));
    }
    // membership respects the interval rule
    for (int b = 0; b < 32; ++b) {
        for (int idx : p.members[b]) {
            CHECK(ds.values[idx] <= p.edges[b + 1] + 1e-12);
            if (b > 0) CHECK(ds.values[idx] > p.edges[b] - 1e-12);
        }
    }
}

TEST_CASE("identical values collapse into a single flagged bin") {
    OfflineDataset ds = dataset_with_values({2, 2, 2, 2});
    ds.f_star_ref = 2;
    BinPartition p = partition_bins(ds, 8);
    CHECK(p.degenerate);
    CHECK(p.members[0].size() == 4);
    for (int b = 1; b < 8; ++b) CHECK(p.members[b].empty());
}

TEST_CASE("bin scores follow the size and distance terms") {
    OfflineDataset ds = dataset_with_values({0, 1, 2, 3});
    ds.f_star_ref = 3;
    BinPartition p = partition_bins(ds, 2);

    // empty bin scores zero
    BinPartition empties = p;
    empties.members[0].clear();
    CHECK(bin_scores(empties, 3.0, 1.0)[0] == 0.0);

    // |B| = K at zero distance gives exactly one half
    BinPartition half = p;
    half.y_mid[1] = half.y_best;
    CHECK(bin_scores(half, 2.0, 1.0)[1] == doctest::Approx(0.5));

    // direct substitution: |B|=100, K=3, distance tau
    OfflineDataset big = dataset_with_values(std::vector<double>(100, 0.0));
    big.values.setLinSpaced(100, 0.0, 1.0);
    big.f_star_ref = 1.0;
    BinPartition q = partition_bins(big, 1);
    q.y_mid[0] = q.y_best - 2.5;
    const double s = bin_scores(q, 3.0, 2.5)[0];
    CHECK(s == doctest::Approx(100.0 / 103.0 * std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("default hyperparameters") {
    OfflineDataset ds = branin_dataset();
    auto [k, tau] = default_hyperparams(ds);
    CHECK(k == doctest::Approx(0.03 * 4500));

    // all values at the optimum collapse tau to the clamp
    OfflineDataset flat = dataset_with_values({1.0, 1.0, 1.0});
    flat.f_star_ref = 1.0;
    CHECK(default_hyperparams(flat).second == doctest::Approx(1e-8));

    // values uniform on [0,1] with f_star 1: tau near the 10th percentile 0.1
    Rng rng(5);
    std::vector<double> uniform(20000);
    for (auto& v : uniform) v = rng.uniform01();
    OfflineDataset u = dataset_with_values(uniform);
    u.f_star_ref = 1.0;
    CHECK(default_hyperparams(u).second == doctest::Approx(0.1).epsilon(0.05));
}

TEST_CASE("allocate_counts floors and gives bin one the remainder") {
    Eigen::VectorXd equal(4);
    equal.setConstant(1.0);
    CHECK(allocate_counts(equal, 64) == std::vector<int>{16, 16, 16, 16});

    Eigen::VectorXd three(3);
    three.setConstant(1.0);
    CHECK(allocate_counts(three, 4) == std::vector<int>{2, 1, 1});

    Eigen::VectorXd skew(2);
    skew << 0.0, 1.0;
    CHECK(allocate_counts(skew, 10) == std::vector<int>{0, 10});

    Eigen::VectorXd zeros = Eigen::VectorXd::Zero(3);
    CHECK_THROWS_AS(allocate_counts(zeros, 8), ConfigError);
}

TEST_CASE("allocation always sums to T") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int n_bins = 1 + static_cast<int>(rng.uniform_int(40));
        const int T = 1 + static_cast<int>(rng.uniform_int(256));
        Eigen::VectorXd scores(n_bins);
        for (int i = 0; i < n_bins; ++i) {
            scores[i] = rng.uniform01() < 0.3 ? 0.0 : rng.uniform01();
        }
        if (scores.sum() <= 0.0) scores[0] = 0.5;
        auto counts = allocate_counts(scores, T);
        CHECK(std::accumulate(counts.begin(), counts.end(), 0) == T);
        for (int c : counts) CHECK(c >= 0);
    }
}

TEST_CASE("augment_rb computes suffix regret sums") {
    Eigen::VectorXd values(3);
    values << 0, 1, 2;
    Eigen::VectorXd budgets = augment_rb(values, 2.0);
    CHECK(budgets[0] == doctest::Approx(3.0));
    CHECK(budgets[1] == doctest::Approx(1.0));
    CHECK(budgets[2] == doctest::Approx(0.0));

    Eigen::VectorXd flat = Eigen::VectorXd::Constant(5, 7.0);
    CHECK(augment_rb(flat, 7.0).cwiseAbs().maxCoeff() == 0.0);

    Eigen::VectorXd single(1);
    single << 1.25;
    CHECK(augment_rb(single, 2.0)[0] == doctest::Approx(0.75));

    CHECK_THROWS_AS(augment_rb(values, 1.0), std::domain_error);
}

TEST_CASE("sampled trajectories satisfy the strategy postconditions") {
    OfflineDataset ds = branin_dataset(2000, 3);
    SortSampleParams params;
    params.T = 64;
    params.n_bins = 32;
    params.num_trajs = 1;

    BinPartition p = partition_bins(ds, 32);
    p.scores = bin_scores(p, 0.03 * ds.n(), default_hyperparams(ds).second);
    p.counts = allocate_counts(p.scores, 64);

    std::set<double> dataset_values(ds.values.data(), ds.values.data() + ds.n());

    Trajectory sorted = sample_trajectory(ds, p, 64, Strategy::random_sorted, 9, ds.f_star_ref);
    for (int t = 0; t + 1 < 64; ++t) CHECK(sorted.values[t] <= sorted.values[t + 1]);
    for (int t = 0; t < 64; ++t) CHECK(dataset_values.count(sorted.values[t]) == 1);

    // partial sorting: bin index nondecreasing, within-bin order free
    Trajectory partial =
        sample_trajectory(ds, p, 64, Strategy::reweight_partial, 10, ds.f_star_ref);
    const double width = (ds.values.maxCoeff() - ds.values.minCoeff()) / 32;
    auto bin_of = [&](double v) {
        const int b = static_cast<int>(std::ceil((v - ds.values.minCoeff()) / width)) - 1;
        return std::clamp(b, 0, 31);
    };
    for (int t = 0; t + 1 < 64; ++t) {
        CHECK(bin_of(partial.values[t]) <= bin_of(partial.values[t + 1]));
    }

    // reweighting shifts mass toward good values
    double traj_mean = 0.0;
    for (int i = 0; i < 100; ++i) {
        Trajectory tr =
            sample_trajectory(ds, p, 64, Strategy::reweight_sorted, 100 + i, ds.f_star_ref);
        traj_mean += tr.values.mean();
    }
    traj_mean /= 100.0;
    CHECK(traj_mean > ds.values.mean());
}

TEST_CASE("budget telescoping and monotonicity on built trajectories") {
    OfflineDataset ds = branin_dataset(2000, 4);
    SortSampleParams params;
    params.T = 64;
    params.n_bins = 32;
    params.num_trajs = 50;
    TrajectoryDataset td = build_traj_dataset(ds, params, 21);
    CHECK(td.num_trajs() == 50);
    for (const auto& traj : td.trajectories) {
        CHECK(traj.values.size() == 64);
        for (int t = 0; t < 63; ++t) {
            const double step = traj.budgets[t] - traj.budgets[t + 1];
            const double expected = td.f_star_used - traj.values[t];
            CHECK(std::abs(step - expected) <=
                  1e-9 * std::max(1.0, std::abs(expected)));
            CHECK(traj.values[t] <= traj.values[t + 1]);  // sorted default
            CHECK(traj.budgets[t] >= traj.budgets[t + 1]);
        }
        CHECK(traj.budgets[63] >= 0.0);
    }
}

TEST_CASE("distribution shift toward the top quartile") {
    OfflineDataset ds = branin_dataset();
    SortSampleParams params;
    params.num_trajs = 100;
    TrajectoryDataset td = build_traj_dataset(ds, params, 31);

    std::vector<double> sorted(ds.values.data(), ds.values.data() + ds.n());
    std::sort(sorted.begin(), sorted.end());
    const double q3 = sorted[static_cast<std::size_t>(0.75 * (sorted.size() - 1))];
    const double ds_frac =
        static_cast<double>(std::count_if(ds.values.data(), ds.values.data() + ds.n(),
                                          [&](double v) { return v >= q3; })) /
        ds.n();
    long hits = 0, total = 0;
    for (const auto& traj : td.trajectories) {
        for (int t = 0; t < traj.values.size(); ++t, ++total) {
            if (traj.values[t] >= q3) ++hits;
        }
    }
    CHECK(static_cast<double>(hits) / total > ds_frac);
}

TEST_CASE("trajectory building is deterministic per seed") {
    OfflineDataset ds = branin_dataset(500, 6);
    SortSampleParams params;
    params.num_trajs = 3;
    TrajectoryDataset a = build_traj_dataset(ds, params, 77);
    TrajectoryDataset b = build_traj_dataset(ds, params, 77);
    for (int i = 0; i < 3; ++i) {
        CHECK(a.trajectories[i].points == b.trajectories[i].points);
        CHECK(a.trajectories[i].budgets == b.trajectories[i].budgets);
    }
}

TEST_CASE("deficit bins fall back to replacement and flag it") {
    OfflineDataset ds = dataset_with_values({0.0, 0.1, 0.2, 10.0});
    ds.f_star_ref = 10.0;
    SortSampleParams params;
    params.T = 16;
    params.n_bins = 2;
    params.num_trajs = 1;
    params.tau = 100.0;  // flat weighting keeps both bins busy
    TrajectoryDataset td = build_traj_dataset(ds, params, 5);
    CHECK(td.trajectories[0].replacement_fallback);
    CHECK(td.trajectories[0].values.size() == 16);
}

TEST_CASE("trajectory files round trip") {
    OfflineDataset ds = branin_dataset(300, 8);
    SortSampleParams params;
    params.num_trajs = 4;
    params.T = 16;
    TrajectoryDataset td = build_traj_dataset(ds, params, 3);
    auto dir = std::filesystem::temp_directory_path() / "bonet_sortsample_tests";
    std::filesystem::create_directories(dir);
    const auto path = dir / "trajs.csv";
    save_trajs(td, path);
    TrajectoryDataset back = load_trajs(path);
    CHECK(back.num_trajs() == 4);
    CHECK(back.T == 16);
    CHECK(back.K == td.K);
    CHECK(back.tau == td.tau);
    CHECK(back.f_star_used == td.f_star_used);
    for (int i = 0; i < 4; ++i) {
        CHECK(back.trajectories[i].points == td.trajectories[i].points);
        CHECK(back.trajectories[i].values == td.trajectories[i].values);
        CHECK(back.trajectories[i].budgets == td.trajectories[i].budgets);
    }
}
