#ifndef BONET_THEORY_HPP
#define BONET_THEORY_HPP

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <json.hpp>

namespace bonet {

using ScalarField = std::function<double(const Eigen::VectorXd&)>;

struct Box {
    Eigen::VectorXd lo, hi;
    int dim() const { return static_cast<int>(lo.size()); }
    double volume() const { return (hi - lo).prod(); }
    double diameter() const { return (hi - lo).norm(); }
};

struct EpsHighReport {
    double epsilon = 0.0;
    double y_min = 0.0, y_max = 0.0;       // sampled range estimates
    double lipschitz_estimate = 0.0;       // max finite-difference slope (lower bound on L)
    double premise_bound = 0.0;            // admissible Lipschitz bound
    bool premise_holds = false;            // lipschitz_estimate <= premise_bound
    double vol_h = 0.0, vol_hc = 0.0;      // Monte-Carlo measures
    double se_h = 0.0, se_hc = 0.0;        // standard errors of the measures
    long sample_count = 0;
    bool conclusion_holds = false;         // vol_h < vol_hc empirically

    nlohmann::json to_json() const;
};

// 2 (eps (y_max - y_min) + y_min - f_boundary) / interval_len.
double premise_bound(double f_boundary, double y_min, double y_max, double epsilon,
                     double interval_len);

// Estimates the y range, splits uniform samples into the eps-high region H
// and its complement, estimates the Lipschitz constant from random nearby
// pairs and evaluates the admissible bound. Throws std::domain_error for a
// constant function.
EpsHighReport eps_high_measure(const ScalarField& fn, const Box& domain, double epsilon,
                               long n_samples, std::uint64_t seed);

}  // namespace bonet

#endif
