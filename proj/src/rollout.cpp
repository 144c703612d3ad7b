#include "bonet/rollout.hpp"

#include <algorithm>
#include <cmath>

#include "bonet/errors.hpp"
#include "bonet/rng.hpp"

namespace bonet {

RbMode rb_mode_from_string(const std::string& s) {
    if (s == "fixed") return RbMode::fixed;
    if (s == "update") return RbMode::update;
    if (s == "update_guarded") return RbMode::update_guarded;
    throw ConfigError("unknown rb mode '" + s + "'");
}

std::string rb_mode_to_string(RbMode m) {
    switch (m) {
        case RbMode::fixed: return "fixed";
        case RbMode::update: return "update";
        case RbMode::update_guarded: return "update_guarded";
    }
    return "?";
}

void RolloutConfig::validate() const {
    if (!(prefix_len >= 1 && prefix_len < total_len)) {
        throw ConfigError("rollout config: need 1 <= prefix_len < total_len");
    }
    if (query_budget < 1) throw ConfigError("rollout config: query_budget must be >= 1");
    if (rb_values.empty()) throw ConfigError("rollout config: rb_values must be nonempty");
    if (!std::is_sorted(rb_values.begin(), rb_values.end())) {
        throw ConfigError("rollout config: rb_values must be ascending");
    }
}

Prefix build_prefix(const OfflineDataset& ds, const SortSampleParams& params, int P,
                    std::uint64_t seed) {
    if (P >= params.T) throw ConfigError("build_prefix: P must be below the trajectory length");
    SortSampleParams one = params;
    one.num_trajs = 1;
    TrajectoryDataset td = build_traj_dataset(ds, one, seed);
    const Trajectory& traj = td.trajectories[0];
    Prefix prefix;
    prefix.points = traj.points.topRows(P);
    prefix.values = traj.values.head(P);
    prefix.budgets = traj.budgets.head(P);
    return prefix;
}

UnrollTrace unroll(const Model<float>& model, const Prefix& prefix, double rhat, int steps,
                   RbMode mode, const Task* task, DecodeMode decode, double temperature,
                   std::uint64_t seed) {
    if (steps < 1) throw ConfigError("unroll: steps must be >= 1");
    if (mode != RbMode::fixed && task == nullptr) {
        throw ConfigError("unroll: update modes need an oracle");
    }
    const int P = static_cast<int>(prefix.values.size());
    const int d = static_cast<int>(prefix.points.cols());

    std::vector<double> r(prefix.budgets.data(), prefix.budgets.data() + P);
    std::vector<Eigen::VectorXd> x;
    x.reserve(P + steps);
    for (int t = 0; t < P; ++t) x.push_back(prefix.points.row(t).transpose());
    std::vector<int> step_ids(P);
    for (int t = 0; t < P; ++t) step_ids[t] = t;

    Rng rng(seed_stream(seed, "decode"));
    UnrollTrace trace;
    trace.points.resize(steps, d);
    trace.budgets_fed.resize(steps);

    double budget = rhat;
    int produced = 0;
    const double f_star = task ? task->spec.f_star : 0.0;
    for (int k = 0; k < steps; ++k) {
        r.push_back(budget);
        step_ids.push_back(P + k);
        Eigen::VectorXd next = predict_next(model, r, x, step_ids, decode, temperature, &rng);
        trace.points.row(produced) = next.transpose();
        trace.budgets_fed[produced] = budget;
        ++produced;
        x.push_back(next);
        if (mode == RbMode::fixed) continue;

        const double value = task->oracle(clamp_to_bounds(task->spec, next));
        ++trace.oracle_calls;
        const double updated = budget - (f_star - value);
        if (mode == RbMode::update) {
            budget = updated;
            if (budget <= 0.0) {
                trace.halted_early = produced < steps;
                break;
            }
        } else {  // update_guarded: skip updates that would go negative
            if (updated > 0.0) budget = updated;
        }
    }
    trace.points.conservativeResize(produced, d);
    trace.budgets_fed.conservativeResize(produced);
    return trace;
}

RolloutResult evaluate(const Model<float>& model, const OfflineDataset& ds, const Task& task,
                       const RolloutConfig& cfg) {
    cfg.validate();
    RolloutResult result;
    result.seed = cfg.seed;
    const int suffix_len = cfg.total_len - cfg.prefix_len;

    for (std::size_t i = 0; i < cfg.rb_values.size(); ++i) {
        const double rhat = cfg.rb_values[i];
        Prefix prefix =
            build_prefix(ds, cfg.prefix_sampler, cfg.prefix_len, seed_stream(cfg.seed, "prefix", i));
        UnrollTrace trace =
            unroll(model, prefix, rhat, suffix_len, cfg.rb_mode,
                   cfg.rb_mode == RbMode::fixed ? nullptr : &task, cfg.decode,
                   cfg.temperature, seed_stream(cfg.seed, "unroll", i));
        for (int k = 0; k < trace.points.rows(); ++k) {
            CandidateRecord rec;
            rec.rhat = rhat;
            rec.step = k + 1;
            rec.point_raw = trace.points.row(k).transpose();
            rec.point_eval = clamp_to_bounds(task.spec, rec.point_raw);
            rec.clamped = !in_bounds(task.spec, rec.point_raw);
            result.candidates.push_back(std::move(rec));
        }
        result.traces.push_back(std::move(trace));
    }

    // oracle budget: lower rhat first, partial tail for the last one that fits
    int budget = cfg.query_budget;
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> evaluated_values;
    for (auto& rec : result.candidates) {
        if (budget == 0) break;
        rec.value = task.oracle(rec.point_eval);
        rec.evaluated = true;
        --budget;
        ++result.queries_used;
        evaluated_values.push_back(rec.value);
        if (rec.value > best) {
            best = rec.value;
            result.best_point = rec.point_eval;
        }
    }
    result.best_value = best;
    std::sort(evaluated_values.begin(), evaluated_values.end());
    const std::size_t n = evaluated_values.size();
    result.median_value = n % 2 == 1
                              ? evaluated_values[n / 2]
                              : 0.5 * (evaluated_values[n / 2 - 1] + evaluated_values[n / 2]);
    return result;
}

std::vector<std::pair<double, double>> irb_sweep(const Model<float>& model,
                                                 const OfflineDataset& ds, const Task& task,
                                                 const std::vector<double>& r1_values,
                                                 std::uint64_t seed) {
    (void)ds;
    std::vector<std::pair<double, double>> out;
    out.reserve(r1_values.size());
    const int T = model.cfg.max_timestep;
    for (std::size_t i = 0; i < r1_values.size(); ++i) {
        const double r1 = r1_values[i];
        Prefix empty;
        empty.points.resize(0, task.spec.dim);
        empty.values.resize(0);
        empty.budgets.resize(0);
        UnrollTrace trace = unroll(model, empty, r1, T, RbMode::update, &task,
                                   DecodeMode::greedy, 1.0, seed_stream(seed, "irb", i));
        double realized = 0.0;
        for (int k = 0; k < trace.points.rows(); ++k) {
            realized += task.spec.f_star -
                        task.oracle(clamp_to_bounds(task.spec, trace.points.row(k).transpose()));
        }
        out.emplace_back(r1, realized);
    }
    return out;
}

namespace {

nlohmann::json vec_to_json(const Eigen::VectorXd& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

}  // namespace

nlohmann::json RolloutResult::to_json(const RolloutConfig& cfg) const {
    nlohmann::json j;
    j["config"] = {{"prefix_len", cfg.prefix_len},
                   {"total_len", cfg.total_len},
                   {"rb_values", cfg.rb_values},
                   {"rb_mode", rb_mode_to_string(cfg.rb_mode)},
                   {"query_budget", cfg.query_budget},
                   {"decode", cfg.decode == DecodeMode::greedy ? "greedy" : "sample"},
                   {"temperature", cfg.temperature}};
    j["seed"] = seed;
    nlohmann::json cands = nlohmann::json::array();
    for (const auto& rec : candidates) {
        cands.push_back({{"rhat", rec.rhat},
                         {"step", rec.step},
                         {"point", vec_to_json(rec.point_raw)},
                         {"point_eval", vec_to_json(rec.point_eval)},
                         {"clamped", rec.clamped},
                         {"evaluated", rec.evaluated},
                         {"value", rec.evaluated ? nlohmann::json(rec.value)
                                                 : nlohmann::json()}});
    }
    j["candidates"] = std::move(cands);
    j["summary"] = {{"best_value", best_value},
                    {"best_point", vec_to_json(best_point)},
                    {"median_value", median_value},
                    {"queries_used", queries_used}};
    return j;
}

}  // namespace bonet
