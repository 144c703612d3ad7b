#include "bonet/functions.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "bonet/errors.hpp"
#include "bonet/rng.hpp"

namespace bonet {

namespace {

constexpr double kBoundsSlack = 1e-12;

void check_continuous(const TaskSpec& spec, const Eigen::VectorXd& x) {
    if (x.size() != spec.dim) {
        throw std::domain_error("point dimension " + std::to_string(x.size()) +
                                " does not match task dim " + std::to_string(spec.dim));
    }
    for (int i = 0; i < spec.dim; ++i) {
        const auto [lo, hi] = spec.bounds[i];
        if (!(x[i] >= lo - kBoundsSlack && x[i] <= hi + kBoundsSlack)) {
            std::ostringstream os;
            os << "coordinate " << i << " = " << x[i] << " outside [" << lo << ", " << hi << "]";
            throw std::domain_error(os.str());
        }
    }
}

void check_discrete(const TaskSpec& spec, const Eigen::VectorXd& x) {
    if (x.size() != spec.dim) {
        throw std::domain_error("sequence length " + std::to_string(x.size()) +
                                " does not match task dim " + std::to_string(spec.dim));
    }
    for (int i = 0; i < spec.dim; ++i) {
        const double v = x[i];
        if (!(v == std::floor(v)) || v < 0 || v >= spec.vocab) {
            throw std::domain_error("symbol " + std::to_string(v) + " at position " +
                                    std::to_string(i) + " outside vocabulary of size " +
                                    std::to_string(spec.vocab));
        }
    }
}

}  // namespace

double eval_branin(double x1, double x2) {
    const double a = -1.0;
    const double b = 5.1 / (4.0 * M_PI * M_PI);
    const double c = 5.0 / M_PI;
    const double r = 6.0;
    const double s = -10.0;
    const double t = 1.0 / (8.0 * M_PI);
    const double u = x2 - b * x1 * x1 + c * x1 - r;
    return a * u * u + s * (1.0 - t) * std::cos(x1) + s;
}

double eval_goldstein_price_neg(double x1, double x2) {
    const double p = x1 + x2 + 1.0;
    const double q = 19.0 - 14.0 * x1 + 3.0 * x1 * x1 - 14.0 * x2 + 6.0 * x1 * x2 + 3.0 * x2 * x2;
    const double u = 2.0 * x1 - 3.0 * x2;
    const double v =
        18.0 - 32.0 * x1 + 12.0 * x1 * x1 + 48.0 * x2 - 36.0 * x1 * x2 + 27.0 * x2 * x2;
    return -(1.0 + p * p * q) * (30.0 + u * u * v);
}

double eval_sixhump_neg(double x1, double x2) {
    const double x1sq = x1 * x1;
    const double x2sq = x2 * x2;
    return -((4.0 - 2.1 * x1sq + x1sq * x1sq / 3.0) * x1sq + x1 * x2 +
             (-4.0 + 4.0 * x2sq) * x2sq);
}

Eigen::VectorXd hidden_pattern_target(int dim, int vocab) {
    Eigen::VectorXd p(dim);
    for (int k = 0; k < dim; ++k) {
        p[k] = static_cast<double>(seed_stream(0x68696464656e70ull, "pattern", k) %
                                   static_cast<std::uint64_t>(vocab));
    }
    return p;
}

double eval_hidden_pattern(const Eigen::VectorXd& symbols, int vocab) {
    const int d = static_cast<int>(symbols.size());
    const Eigen::VectorXd p = hidden_pattern_target(d, vocab);
    const double lambda = 0.5;
    double total = 0.0;
    for (int k = 0; k < d; ++k) {
        const bool m = symbols[k] == p[k];
        total += m ? 1.0 : 0.0;
        if (k + 1 < d && m && symbols[k + 1] == p[k + 1]) total += lambda;
    }
    return total;
}

double task_optimum(const TaskSpec& spec) { return spec.f_star; }

Task make_hidden_pattern_task(int dim, int vocab) {
    Task task;
    task.spec.name = "hidden_pattern";
    task.spec.kind = TaskKind::discrete;
    task.spec.dim = dim;
    task.spec.vocab = vocab;
    task.spec.f_star = dim + 0.5 * (dim - 1);
    task.oracle_unchecked = [vocab](const Eigen::VectorXd& x) {
        return eval_hidden_pattern(x, vocab);
    };
    TaskSpec spec = task.spec;
    task.oracle = [spec, vocab](const Eigen::VectorXd& x) {
        check_discrete(spec, x);
        return eval_hidden_pattern(x, vocab);
    };
    return task;
}

namespace {

Task make_continuous(std::string name, std::vector<std::pair<double, double>> bounds,
                     double f_star, double (*fn)(double, double)) {
    Task task;
    task.spec.name = std::move(name);
    task.spec.kind = TaskKind::continuous;
    task.spec.dim = static_cast<int>(bounds.size());
    task.spec.bounds = std::move(bounds);
    task.spec.f_star = f_star;
    task.oracle_unchecked = [fn](const Eigen::VectorXd& x) { return fn(x[0], x[1]); };
    TaskSpec spec = task.spec;
    task.oracle = [spec, fn](const Eigen::VectorXd& x) {
        check_continuous(spec, x);
        return fn(x[0], x[1]);
    };
    return task;
}

const std::map<std::string, Task>& registry() {
    static const std::map<std::string, Task> tasks = [] {
        std::map<std::string, Task> m;
        // Negation convention: every registered task is a maximization problem.
        m.emplace("branin", make_continuous("branin", {{-5.0, 10.0}, {0.0, 15.0}},
                                            -5.0 / (4.0 * M_PI), &eval_branin));
        m.emplace("goldstein_price_neg",
                  make_continuous("goldstein_price_neg", {{-2.0, 2.0}, {-2.0, 2.0}}, -3.0,
                                  &eval_goldstein_price_neg));
        m.emplace("sixhump_neg",
                  make_continuous("sixhump_neg", {{-3.0, 3.0}, {-2.0, 2.0}},
                                  1.0316284534898777, &eval_sixhump_neg));
        m.emplace("hidden_pattern", make_hidden_pattern_task(8, 4));
        return m;
    }();
    return tasks;
}

}  // namespace

const Task& find_task(const std::string& name) {
    const auto& tasks = registry();
    auto it = tasks.find(name);
    if (it == tasks.end()) {
        throw ConfigError("unknown task '" + name + "'");
    }
    return it->second;
}

std::vector<std::string> task_names() {
    std::vector<std::string> names;
    for (const auto& [name, task] : registry()) names.push_back(name);
    return names;
}

bool in_bounds(const TaskSpec& spec, const Eigen::VectorXd& x) {
    if (x.size() != spec.dim) return false;
    if (spec.kind == TaskKind::discrete) {
        for (int i = 0; i < spec.dim; ++i) {
            if (x[i] != std::floor(x[i]) || x[i] < 0 || x[i] >= spec.vocab) return false;
        }
        return true;
    }
    for (int i = 0; i < spec.dim; ++i) {
        if (x[i] < spec.bounds[i].first || x[i] > spec.bounds[i].second) return false;
    }
    return true;
}

Eigen::VectorXd clamp_to_bounds(const TaskSpec& spec, const Eigen::VectorXd& x) {
    Eigen::VectorXd out = x;
    if (spec.kind == TaskKind::discrete) {
        for (int i = 0; i < spec.dim; ++i) {
            out[i] = std::min(std::max(std::round(out[i]), 0.0),
                              static_cast<double>(spec.vocab - 1));
        }
        return out;
    }
    for (int i = 0; i < spec.dim; ++i) {
        out[i] = std::min(std::max(out[i], spec.bounds[i].first), spec.bounds[i].second);
    }
    return out;
}

}  // namespace bonet
