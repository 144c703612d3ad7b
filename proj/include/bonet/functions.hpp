#ifndef BONET_FUNCTIONS_HPP
#define BONET_FUNCTIONS_HPP

#include <Eigen/Core>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace bonet {

enum class TaskKind { continuous, discrete };

// Static description of a black-box objective: search space and known maximum.
struct TaskSpec {
    std::string name;
    TaskKind kind = TaskKind::continuous;
    int dim = 0;
    std::vector<std::pair<double, double>> bounds;  // per-dimension, continuous tasks
    int vocab = 0;                                  // V, discrete tasks
    double f_star = 0.0;                            // known maximum value
};

// A registered objective. `oracle` validates its input against the task
// bounds; `oracle_unchecked` evaluates the raw formula anywhere (used by
// optimizers that are allowed to wander outside the box, e.g. gradient
// ascent on a surrogate).
struct Task {
    TaskSpec spec;
    std::function<double(const Eigen::VectorXd&)> oracle;
    std::function<double(const Eigen::VectorXd&)> oracle_unchecked;
};

// Negated Branin on [-5,10]x[0,15]; maximum -0.397887 at three points.
double eval_branin(double x1, double x2);
// Negated Goldstein-Price on [-2,2]^2; maximum -3 at (0,-1).
double eval_goldstein_price_neg(double x1, double x2);
// Negated six-hump camel on [-3,3]x[-2,2]; maximum ~1.0316 at +-(0.0898,-0.7126).
double eval_sixhump_neg(double x1, double x2);

// Synthetic discrete objective over V symbols: one point per matched pattern
// position plus a 0.5 bonus per adjacent matched pair. Maximum d + 0.5(d-1).
double eval_hidden_pattern(const Eigen::VectorXd& symbols, int vocab);
Eigen::VectorXd hidden_pattern_target(int dim, int vocab);

double task_optimum(const TaskSpec& spec);

// Registry lookup by name; throws ConfigError for unknown names.
const Task& find_task(const std::string& name);
std::vector<std::string> task_names();

// Builds a hidden-pattern task of arbitrary size (the registry carries the
// default d=8, V=4 instance under the name "hidden_pattern").
Task make_hidden_pattern_task(int dim, int vocab);

bool in_bounds(const TaskSpec& spec, const Eigen::VectorXd& x);
Eigen::VectorXd clamp_to_bounds(const TaskSpec& spec, const Eigen::VectorXd& x);

}  // namespace bonet

#endif
