#ifndef BONET_DATASET_HPP
#define BONET_DATASET_HPP

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>

#include "bonet/functions.hpp"

namespace bonet {

// A fixed set of prior evaluations of one task. Immutable after
// construction; all transforms below return a new dataset.
struct OfflineDataset {
    TaskSpec task;
    Eigen::MatrixXd points;  // N x d; discrete tasks store integer-valued symbols
    Eigen::VectorXd values;  // N
    bool normalized = false;
    double y_min_ref = 0.0;
    double y_max_ref = 1.0;
    // Task optimum mapped through the same normalization as `values`.
    double f_star_ref = 0.0;

    int n() const { return static_cast<int>(values.size()); }
    int dim() const { return static_cast<int>(points.cols()); }
};

// Samples n_raw uniform in-bounds points, evaluates the oracle and removes
// the top cut_fraction by value (ties broken by original index). The
// survivors keep their sampling order.
OfflineDataset generate_offline(const Task& task, int n_raw, double cut_fraction,
                                std::uint64_t seed);

// Affine rescale of values to (y - y_min) / (y_max - y_min).
OfflineDataset normalize_values(const OfflineDataset& ds, double y_min, double y_max);

// Adds zero-mean Gaussian noise with std scale_fraction * max|values|.
OfflineDataset add_value_noise(const OfflineDataset& ds, double scale_fraction,
                               std::uint64_t seed);

enum class WithholdMode { random, top };

// Removes round(N * fraction) points, either uniformly at random or the top
// fraction by value.
OfflineDataset withhold(const OfflineDataset& ds, double fraction, WithholdMode mode,
                        std::uint64_t seed);

// Text format: header `v1;task=<name>;kind=<c|d>;dim=<d>;n=<N>;normalized=<0|1>`
// (plus `;ymin=..;ymax=..` when normalized), then one CSV row `x_1,...,x_d,y`
// per point with 17 significant digits. Round-trips bit-exactly.
void save_dataset(const OfflineDataset& ds, const std::filesystem::path& path);
OfflineDataset load_dataset(const std::filesystem::path& path);

}  // namespace bonet

#endif
