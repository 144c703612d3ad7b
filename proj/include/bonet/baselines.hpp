#ifndef BONET_BASELINES_HPP
#define BONET_BASELINES_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "bonet/dataset.hpp"

namespace bonet {

// Forward model for the gradient-ascent baseline: tanh MLP d -> 128 -> 1.
// Inputs and targets are standardized internally with fixed statistics from
// the training set; predict() and input_grad() work in raw coordinates.
struct SurrogateNet {
    Eigen::MatrixXd w1;  // hidden x d
    Eigen::VectorXd b1;
    Eigen::RowVectorXd w2;  // 1 x hidden
    double b2 = 0.0;
    Eigen::VectorXd in_mean, in_std;
    double y_mean = 0.0, y_std = 1.0;

    double predict(const Eigen::VectorXd& x) const;
    Eigen::VectorXd input_grad(const Eigen::VectorXd& x) const;

    // standardized view used by the ascent loop
    Eigen::VectorXd to_latent(const Eigen::VectorXd& x) const;
    Eigen::VectorXd from_latent(const Eigen::VectorXd& z) const;
    Eigen::VectorXd latent_grad(const Eigen::VectorXd& z) const;
};

struct SurrogateTrainConfig {
    int hidden = 128;
    int epochs = 75;
    double learning_rate = 1e-4;
    int batch_size = 128;
};

SurrogateNet train_surrogate(const OfflineDataset& ds, const SurrogateTrainConfig& cfg,
                             std::uint64_t seed);

struct GradAscentResult {
    Eigen::VectorXd best_point;
    double best_value = 0.0;
    std::vector<Eigen::VectorXd> endpoints;
    std::vector<double> endpoint_values;
};

// Trains the surrogate, then ascends its input from `restarts` random dataset
// points. Endpoints are scored with the raw objective formula; like the
// surrogate itself, the ascent is free to leave the domain box.
GradAscentResult grad_ascent_baseline(const OfflineDataset& ds, const Task& task,
                                      int steps = 64, double step_size = 0.1,
                                      int restarts = 2, std::uint64_t seed = 0);

// Q uniform samples from the axis-aligned cube around the best dataset point
// (half-width = width * per-dimension range, clipped to the domain).
std::vector<double> random_hypercube_baseline(const OfflineDataset& ds, const Task& task,
                                              double width, int Q, std::uint64_t seed);

// Closed-form expected improvement for maximization.
double expected_improvement(double mean, double std_dev, double incumbent);

// Squared-exponential GP on unit-square inputs with standardized targets.
// Fixed hyperparameters; no marginal-likelihood fitting.
struct GpState {
    Eigen::MatrixXd x;  // n x d, unit-square coordinates
    Eigen::VectorXd y;  // standardized observations
    double length_scale = 0.1 * M_SQRT2;
    double signal_var = 1.0;
    double noise_std = 1e-3;
    Eigen::LLT<Eigen::MatrixXd> chol;
    Eigen::VectorXd alpha;
    double y_mean = 0.0, y_std = 1.0;

    // Throws on factorization failure after escalating the jitter x10 up to 1e-2.
    void fit(const Eigen::MatrixXd& x_unit, const Eigen::VectorXd& y_raw);
    // Posterior mean/std in standardized units.
    std::pair<double, double> predict(const Eigen::VectorXd& x_unit) const;
};

struct GpEiConfig {
    int n_init = 5;
    int iters = 60;
    int candidates_per_iter = 2048;
};

// Online GP-EI reference optimizer; returns the oracle values of all
// proposed points (initial design included) in query order.
std::vector<double> gp_ei_run(const Task& task, const GpEiConfig& cfg, std::uint64_t seed);

}  // namespace bonet

#endif
