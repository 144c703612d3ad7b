#include "bonet/theory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bonet/errors.hpp"
#include "bonet/rng.hpp"

namespace bonet {

double premise_bound(double f_boundary, double y_min, double y_max, double epsilon,
                     double interval_len) {
    if (!(y_max > y_min)) throw ConfigError("premise_bound: y_max must exceed y_min");
    if (!(interval_len > 0.0)) throw ConfigError("premise_bound: interval must have length");
    return 2.0 * (epsilon * (y_max - y_min) + y_min - f_boundary) / interval_len;
}

namespace {

Eigen::VectorXd uniform_point(const Box& box, Rng& rng) {
    Eigen::VectorXd x(box.dim());
    for (int j = 0; j < box.dim(); ++j) x[j] = rng.uniform(box.lo[j], box.hi[j]);
    return x;
}

// Max slope over random nearby pairs; separations are log-uniform between
// 1e-4 and 1e-1 of the domain diameter. A lower bound on the true constant.
double estimate_lipschitz(const ScalarField& fn, const Box& box, long n_pairs, Rng& rng) {
    const double diam = box.diameter();
    double best = 0.0;
    for (long i = 0; i < n_pairs; ++i) {
        Eigen::VectorXd a = uniform_point(box, rng);
        Eigen::VectorXd dir(box.dim());
        double norm = 0.0;
        do {
            for (int j = 0; j < box.dim(); ++j) dir[j] = rng.normal();
            norm = dir.norm();
        } while (norm == 0.0);
        dir /= norm;
        const double h = diam * std::pow(10.0, rng.uniform(-4.0, -1.0));
        Eigen::VectorXd b = a + h * dir;
        for (int j = 0; j < box.dim(); ++j) b[j] = std::clamp(b[j], box.lo[j], box.hi[j]);
        const double dist = (b - a).norm();
        if (dist < 1e-12) continue;
        best = std::max(best, std::abs(fn(b) - fn(a)) / dist);
    }
    return best;
}

}  // namespace

EpsHighReport eps_high_measure(const ScalarField& fn, const Box& domain, double epsilon,
                               long n_samples, std::uint64_t seed) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw ConfigError("eps_high_measure: epsilon must be in (0, 1)");
    }
    if (n_samples < 10000) throw ConfigError("eps_high_measure: need at least 1e4 samples");

    EpsHighReport report;
    report.epsilon = epsilon;
    report.sample_count = n_samples;

    // range estimate
    Rng range_rng(seed_stream(seed, "range"));
    double y_min = std::numeric_limits<double>::infinity();
    double y_max = -std::numeric_limits<double>::infinity();
    for (long i = 0; i < n_samples; ++i) {
        const double v = fn(uniform_point(domain, range_rng));
        y_min = std::min(y_min, v);
        y_max = std::max(y_max, v);
    }
    if (!(y_max - y_min > 1e-12 * std::max(1.0, std::abs(y_max)))) {
        throw std::domain_error("eps_high_measure: function range is degenerate");
    }
    report.y_min = y_min;
    report.y_max = y_max;

    // H vs H^c split; exhaustive and exclusive per sample
    const double threshold = y_min + epsilon * (y_max - y_min);
    Rng class_rng(seed_stream(seed, "classify"));
    long in_h = 0;
    for (long i = 0; i < n_samples; ++i) {
        if (fn(uniform_point(domain, class_rng)) >= threshold) ++in_h;
    }
    const double vol = domain.volume();
    const double p = static_cast<double>(in_h) / n_samples;
    const double se = std::sqrt(std::max(p * (1.0 - p), 1e-12) / n_samples);
    report.vol_h = p * vol;
    report.vol_hc = (1.0 - p) * vol;
    report.se_h = se * vol;
    report.se_hc = se * vol;
    report.conclusion_holds = report.vol_h < report.vol_hc;

    // Lipschitz estimate and the admissible bound
    Rng lip_rng(seed_stream(seed, "lipschitz"));
    report.lipschitz_estimate =
        estimate_lipschitz(fn, domain, std::min<long>(n_samples, 100000), lip_rng);

    double f_boundary;
    if (domain.dim() == 1) {
        f_boundary = std::min(fn(domain.lo), fn(domain.hi));
    } else {
        // max over the first-coordinate lower face
        Rng face_rng(seed_stream(seed, "face"));
        f_boundary = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < 10000; ++i) {
            Eigen::VectorXd x = uniform_point(domain, face_rng);
            x[0] = domain.lo[0];
            f_boundary = std::max(f_boundary, fn(x));
        }
    }
    report.premise_bound =
        premise_bound(f_boundary, y_min, y_max, epsilon, domain.hi[0] - domain.lo[0]);
    report.premise_holds = report.lipschitz_estimate <= report.premise_bound;
    return report;
}

nlohmann::json EpsHighReport::to_json() const {
    return nlohmann::json{{"epsilon", epsilon},
                          {"y_min", y_min},
                          {"y_max", y_max},
                          {"lipschitz_estimate", lipschitz_estimate},
                          {"premise_bound", premise_bound},
                          {"premise_holds", premise_holds},
                          {"vol_h", vol_h},
                          {"vol_hc", vol_hc},
                          {"se_h", se_h},
                          {"se_hc", se_hc},
                          {"sample_count", sample_count},
                          {"conclusion_holds", conclusion_holds}};
}

}  // namespace bonet
