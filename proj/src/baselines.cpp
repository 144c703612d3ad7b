#include "bonet/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bonet/errors.hpp"
#include "bonet/rng.hpp"

namespace bonet {

double SurrogateNet::predict(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd z = (x - in_mean).cwiseQuotient(in_std);
    const Eigen::VectorXd h = (w1 * z + b1).array().tanh();
    return (w2 * h + Eigen::VectorXd::Constant(1, b2))(0) * y_std + y_mean;
}

Eigen::VectorXd SurrogateNet::input_grad(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd z = (x - in_mean).cwiseQuotient(in_std);
    return latent_grad(z).cwiseQuotient(in_std) * y_std;
}

Eigen::VectorXd SurrogateNet::to_latent(const Eigen::VectorXd& x) const {
    return (x - in_mean).cwiseQuotient(in_std);
}

Eigen::VectorXd SurrogateNet::from_latent(const Eigen::VectorXd& z) const {
    return in_mean + z.cwiseProduct(in_std);
}

// Gradient of the standardized prediction with respect to the standardized
// input; the scale the training loss saw.
Eigen::VectorXd SurrogateNet::latent_grad(const Eigen::VectorXd& z) const {
    const Eigen::VectorXd pre = w1 * z + b1;
    const Eigen::VectorXd dtanh = 1.0 - pre.array().tanh().square();
    return w1.transpose() * (w2.transpose().cwiseProduct(dtanh));
}

SurrogateNet train_surrogate(const OfflineDataset& ds, const SurrogateTrainConfig& cfg,
                             std::uint64_t seed) {
    const int d = ds.dim();
    const int n = ds.n();
    SurrogateNet net;
    net.in_mean = ds.points.colwise().mean().transpose();
    net.in_std.resize(d);
    for (int j = 0; j < d; ++j) {
        const double var = (ds.points.col(j).array() - net.in_mean[j]).square().mean();
        net.in_std[j] = std::max(std::sqrt(var), 1e-12);
    }
    net.y_mean = ds.values.mean();
    net.y_std = std::max(std::sqrt((ds.values.array() - net.y_mean).square().mean()), 1e-12);

    Eigen::MatrixXd xs(d, n);
    Eigen::VectorXd ys(n);
    for (int i = 0; i < n; ++i) {
        xs.col(i) = (ds.points.row(i).transpose() - net.in_mean).cwiseQuotient(net.in_std);
        ys[i] = (ds.values[i] - net.y_mean) / net.y_std;
    }

    Rng rng(seed_stream(seed, "surrogate_init"));
    const int hidden = cfg.hidden;
    net.w1.resize(hidden, d);
    net.b1.setZero(hidden);
    net.w2.resize(1, hidden);
    net.b2 = 0.0;
    const double s1 = 1.0 / std::sqrt(static_cast<double>(d));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (int i = 0; i < hidden; ++i) {
        for (int j = 0; j < d; ++j) net.w1(i, j) = s1 * rng.normal();
        net.w2(0, i) = s2 * rng.normal();
    }

    // Adam on MSE, standardized units
    Eigen::MatrixXd m1 = Eigen::MatrixXd::Zero(hidden, d), v1 = m1;
    Eigen::VectorXd mb1 = Eigen::VectorXd::Zero(hidden), vb1 = mb1;
    Eigen::RowVectorXd m2 = Eigen::RowVectorXd::Zero(hidden), v2 = m2;
    double mb2 = 0.0, vb2 = 0.0;
    long step = 0;
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(seed_stream(seed, "surrogate_batches"));

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (int pos = 0; pos < n; pos += cfg.batch_size) {
            const int bsz = std::min(cfg.batch_size, n - pos);
            Eigen::MatrixXd gw1 = Eigen::MatrixXd::Zero(hidden, d);
            Eigen::VectorXd gb1 = Eigen::VectorXd::Zero(hidden);
            Eigen::RowVectorXd gw2 = Eigen::RowVectorXd::Zero(hidden);
            double gb2 = 0.0;
            for (int k = 0; k < bsz; ++k) {
                const int i = order[pos + k];
                const Eigen::VectorXd pre = net.w1 * xs.col(i) + net.b1;
                const Eigen::VectorXd h = pre.array().tanh();
                const double out = net.w2.dot(h) + net.b2;
                const double dout = 2.0 * (out - ys[i]) / bsz;
                gw2 += dout * h.transpose();
                gb2 += dout;
                const Eigen::VectorXd dh =
                    (net.w2.transpose() * dout).cwiseProduct((1.0 - h.array().square()).matrix());
                gw1 += dh * xs.col(i).transpose();
                gb1 += dh;
            }
            ++step;
            const double c1 = 1.0 - std::pow(beta1, step);
            const double c2 = 1.0 - std::pow(beta2, step);
            auto adam = [&](auto& w, auto& m, auto& v, const auto& g) {
                m = beta1 * m + (1.0 - beta1) * g;
                v = (beta2 * v.array() + (1.0 - beta2) * g.array().square()).matrix();
                w.array() -= cfg.learning_rate * (m.array() / c1) /
                             ((v.array() / c2).sqrt() + eps);
            };
            adam(net.w1, m1, v1, gw1);
            adam(net.b1, mb1, vb1, gb1);
            adam(net.w2, m2, v2, gw2);
            mb2 = beta1 * mb2 + (1.0 - beta1) * gb2;
            vb2 = beta2 * vb2 + (1.0 - beta2) * gb2 * gb2;
            net.b2 -= cfg.learning_rate * (mb2 / c1) / (std::sqrt(vb2 / c2) + eps);
        }
    }
    return net;
}

GradAscentResult grad_ascent_baseline(const OfflineDataset& ds, const Task& task, int steps,
                                      double step_size, int restarts, std::uint64_t seed) {
    if (task.spec.kind != TaskKind::continuous) {
        throw ConfigError("grad_ascent_baseline: continuous tasks only");
    }
    SurrogateNet net = train_surrogate(ds, {}, seed_stream(seed, "surrogate"));
    Rng rng(seed_stream(seed, "restarts"));
    GradAscentResult result;
    result.best_value = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        // ascend in the surrogate's standardized coordinates, the scale its
        // training saw; the walk may leave the domain box
        Eigen::VectorXd z =
            net.to_latent(ds.points.row(rng.uniform_int(ds.n())).transpose());
        for (int k = 0; k < steps; ++k) z += step_size * net.latent_grad(z);
        const Eigen::VectorXd x = net.from_latent(z);
        const double value = task.oracle_unchecked(x);
        result.endpoints.push_back(x);
        result.endpoint_values.push_back(value);
        if (value > result.best_value) {
            result.best_value = value;
            result.best_point = x;
        }
    }
    return result;
}

std::vector<double> random_hypercube_baseline(const OfflineDataset& ds, const Task& task,
                                              double width, int Q, std::uint64_t seed) {
    if (width < 0.0) throw ConfigError("random_hypercube_baseline: width must be >= 0");
    Eigen::Index best_idx;
    ds.values.maxCoeff(&best_idx);
    const Eigen::VectorXd center = ds.points.row(best_idx).transpose();
    Rng rng(seed);
    std::vector<double> values;
    values.reserve(Q);
    for (int q = 0; q < Q; ++q) {
        Eigen::VectorXd x(ds.dim());
        for (int j = 0; j < ds.dim(); ++j) {
            const auto [lo, hi] = task.spec.bounds[j];
            const double half = width * (hi - lo);
            x[j] = rng.uniform(std::max(lo, center[j] - half), std::min(hi, center[j] + half));
        }
        values.push_back(task.oracle(x));
    }
    return values;
}

double expected_improvement(double mean, double std_dev, double incumbent) {
    const double diff = mean - incumbent;
    if (std_dev <= 0.0) return std::max(diff, 0.0);
    const double z = diff / std_dev;
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
    const double cdf = 0.5 * std::erfc(-z / M_SQRT2);
    return diff * cdf + std_dev * pdf;
}

void GpState::fit(const Eigen::MatrixXd& x_unit, const Eigen::VectorXd& y_raw) {
    x = x_unit;
    y_mean = y_raw.mean();
    y_std = std::max(std::sqrt((y_raw.array() - y_mean).square().mean()), 1e-12);
    y = (y_raw.array() - y_mean) / y_std;

    const Eigen::Index n = x.rows();
    Eigen::MatrixXd k(n, n);
    const double inv2l2 = 1.0 / (2.0 * length_scale * length_scale);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double sq = (x.row(i) - x.row(j)).squaredNorm();
            k(i, j) = k(j, i) = signal_var * std::exp(-sq * inv2l2);
        }
    }
    for (double jitter = noise_std; jitter <= 1e-2 + 1e-15; jitter *= 10.0) {
        Eigen::MatrixXd kj = k + jitter * jitter * Eigen::MatrixXd::Identity(n, n);
        chol.compute(kj);
        if (chol.info() == Eigen::Success) {
            alpha = chol.solve(y);
            return;
        }
    }
    throw std::runtime_error("GP kernel factorization failed after jitter escalation");
}

std::pair<double, double> GpState::predict(const Eigen::VectorXd& x_unit) const {
    const Eigen::Index n = x.rows();
    Eigen::VectorXd ks(n);
    const double inv2l2 = 1.0 / (2.0 * length_scale * length_scale);
    for (Eigen::Index i = 0; i < n; ++i) {
        ks[i] = signal_var * std::exp(-(x.row(i).transpose() - x_unit).squaredNorm() * inv2l2);
    }
    const double mean = ks.dot(alpha);
    const Eigen::VectorXd kinv_ks = chol.solve(ks);
    const double var = std::max(signal_var - ks.dot(kinv_ks), 0.0);
    return {mean, std::sqrt(var)};
}

std::vector<double> gp_ei_run(const Task& task, const GpEiConfig& cfg, std::uint64_t seed) {
    if (task.spec.kind != TaskKind::continuous) {
        throw ConfigError("gp_ei_run: continuous tasks only");
    }
    const int d = task.spec.dim;
    Rng rng(seed);
    auto to_unit = [&](const Eigen::VectorXd& raw) {
        Eigen::VectorXd u(d);
        for (int j = 0; j < d; ++j) {
            const auto [lo, hi] = task.spec.bounds[j];
            u[j] = (raw[j] - lo) / (hi - lo);
        }
        return u;
    };
    auto from_unit = [&](const Eigen::VectorXd& u) {
        Eigen::VectorXd raw(d);
        for (int j = 0; j < d; ++j) {
            const auto [lo, hi] = task.spec.bounds[j];
            raw[j] = lo + u[j] * (hi - lo);
        }
        return raw;
    };

    Eigen::MatrixXd xs(cfg.n_init, d);
    Eigen::VectorXd ys(cfg.n_init);
    std::vector<double> proposed;
    for (int i = 0; i < cfg.n_init; ++i) {
        Eigen::VectorXd u(d);
        for (int j = 0; j < d; ++j) u[j] = rng.uniform01();
        xs.row(i) = u.transpose();
        ys[i] = task.oracle(from_unit(u));
        proposed.push_back(ys[i]);
    }

    GpState gp;
    for (int it = 0; it < cfg.iters; ++it) {
        gp.fit(xs, ys);
        const double incumbent = (ys.maxCoeff() - gp.y_mean) / gp.y_std;
        double best_ei = -1.0;
        Eigen::VectorXd best_u(d);
        for (int c = 0; c < cfg.candidates_per_iter; ++c) {
            Eigen::VectorXd u(d);
            for (int j = 0; j < d; ++j) u[j] = rng.uniform01();
            const auto [mean, std_dev] = gp.predict(u);
            const double ei = expected_improvement(mean, std_dev, incumbent);
            if (ei > best_ei) {
                best_ei = ei;
                best_u = u;
            }
        }
        const double value = task.oracle(from_unit(best_u));
        proposed.push_back(value);
        xs.conservativeResize(xs.rows() + 1, d);
        xs.row(xs.rows() - 1) = best_u.transpose();
        ys.conservativeResize(ys.size() + 1);
        ys[ys.size() - 1] = value;
    }
    return proposed;
}

}  // namespace bonet
