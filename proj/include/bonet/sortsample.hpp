#ifndef BONET_SORTSAMPLE_HPP
#define BONET_SORTSAMPLE_HPP

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bonet/dataset.hpp"

namespace bonet {

enum class Strategy { random, random_sorted, reweight_partial, reweight_sorted };

Strategy strategy_from_string(const std::string& s);
std::string strategy_to_string(Strategy s);

// Equal-width value bins over [y_min, y_max] of a dataset. Bin i covers the
// half-open interval (edges[i], edges[i+1]] except bin 0, whose lower edge is
// closed so the minimum point always lands in it.
struct BinPartition {
    int n_bins = 0;
    Eigen::VectorXd edges;                  // n_bins + 1 ascending
    std::vector<std::vector<int>> members;  // dataset indices per bin
    Eigen::VectorXd y_mid;                  // bin interval midpoints
    double y_best = 0.0;                    // best dataset value
    bool degenerate = false;                // all values identical
    Eigen::VectorXd scores;                 // filled by bin_scores
    std::vector<int> counts;                // filled by allocate_counts
};

BinPartition partition_bins(const OfflineDataset& ds, int n_bins);

// s_i = (|B_i| / (|B_i| + K)) * exp(-|y_best - y_mid_i| / tau); empty bins 0.
// K and tau are clamped below at 1e-8.
Eigen::VectorXd bin_scores(const BinPartition& p, double K, double tau);

// Default hyperparameters: K = 0.03 N and tau = the 10th percentile of the
// per-point regrets {f_star_used - y_i}.
std::pair<double, double> default_hyperparams(const OfflineDataset& ds,
                                              std::optional<double> f_star_override = {});

// Linearly interpolated percentile of {f_star - y_i}.
double regret_percentile(const OfflineDataset& ds, double percentile, double f_star);

// n_i = floor(T * s_i / sum s) for i >= 2, with bin 1 absorbing the remainder
// so the counts always sum to T.
std::vector<int> allocate_counts(const Eigen::VectorXd& scores, int T);

// R_t = sum_{j>=t} (f_star - v_j).
Eigen::VectorXd augment_rb(const Eigen::VectorXd& values, double f_star);

struct Trajectory {
    Eigen::MatrixXd points;  // T x d
    Eigen::VectorXd values;  // T
    Eigen::VectorXd budgets; // T, nonincreasing when sorted
    double f_star_used = 0.0;
    bool replacement_fallback = false;  // some bin was smaller than its count
};

// Draws one trajectory. Reweighted strategies require partition.counts to be
// allocated. Per-bin draws are uniform without replacement within the
// trajectory; a deficit is drawn with replacement and flagged.
Trajectory sample_trajectory(const OfflineDataset& ds, const BinPartition& partition, int T,
                             Strategy strategy, std::uint64_t seed, double f_star_used);

struct SortSampleParams {
    int T = 64;
    int n_bins = 32;
    int num_trajs = 400;
    Strategy strategy = Strategy::reweight_sorted;
    std::optional<double> K;        // default 0.03 N
    std::optional<double> tau;      // default 10th-percentile regret
    std::optional<double> f_star;   // default dataset f_star_ref
};

struct TrajectoryDataset {
    std::vector<Trajectory> trajectories;
    TaskSpec task;
    Strategy strategy = Strategy::reweight_sorted;
    int T = 0;
    int n_bins = 0;
    double K = 0.0;
    double tau = 0.0;
    double f_star_used = 0.0;
    std::uint64_t seed = 0;

    int num_trajs() const { return static_cast<int>(trajectories.size()); }
};

// Phase 1: bins once, scores once, then draws num_trajs independent
// trajectories, each from its own (seed, index) substream.
TrajectoryDataset build_traj_dataset(const OfflineDataset& ds, const SortSampleParams& params,
                                     std::uint64_t seed);

// Text format: header `v1;task=..;T=..;num_trajs=..;strategy=..;K=..;tau=..;
// nbins=..;fstar=..;seed=..`, then per trajectory T lines of `R,x_1..x_d,y`.
void save_trajs(const TrajectoryDataset& td, const std::filesystem::path& path);
TrajectoryDataset load_trajs(const std::filesystem::path& path);

}  // namespace bonet

#endif
