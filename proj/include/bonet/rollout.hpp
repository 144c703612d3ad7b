#ifndef BONET_ROLLOUT_HPP
#define BONET_ROLLOUT_HPP

#include <cstdint>
#include <json.hpp>
#include <vector>

#include "bonet/model.hpp"
#include "bonet/sortsample.hpp"

namespace bonet {

enum class RbMode { fixed, update, update_guarded };

RbMode rb_mode_from_string(const std::string& s);
std::string rb_mode_to_string(RbMode m);

struct RolloutConfig {
    int prefix_len = 32;  // P
    int total_len = 64;   // T
    std::vector<double> rb_values = {0.0, 0.01, 0.05, 0.1};  // ascending
    RbMode rb_mode = RbMode::fixed;
    int query_budget = 128;  // Q
    DecodeMode decode = DecodeMode::greedy;
    double temperature = 1.0;
    std::uint64_t seed = 0;
    SortSampleParams prefix_sampler;  // phase-1 parameters for prefix construction

    void validate() const;
};

// First P timesteps of one phase-1 trajectory; budgets keep the values
// computed over the full length-T trajectory before truncation.
struct Prefix {
    Eigen::MatrixXd points;   // P x d
    Eigen::VectorXd values;   // P
    Eigen::VectorXd budgets;  // P
};

Prefix build_prefix(const OfflineDataset& ds, const SortSampleParams& params, int P,
                    std::uint64_t seed);

struct UnrollTrace {
    Eigen::MatrixXd points;       // generated points, one row per step
    Eigen::VectorXd budgets_fed;  // budget fed at each generated step
    int oracle_calls = 0;         // oracle queries made during generation
    bool halted_early = false;    // update mode stopped on a non-positive budget
};

// Rolls the prediction subsequence. Fixed mode feeds rhat at every step and
// never touches the oracle; update modes subtract realized per-step regret
// (clamped points are what the oracle sees).
UnrollTrace unroll(const Model<float>& model, const Prefix& prefix, double rhat, int steps,
                   RbMode mode, const Task* task, DecodeMode decode, double temperature,
                   std::uint64_t seed);

struct CandidateRecord {
    double rhat = 0.0;
    int step = 0;                // position within the suffix, 1-based
    Eigen::VectorXd point_raw;   // as generated
    Eigen::VectorXd point_eval;  // after clamping to the domain
    bool clamped = false;
    bool evaluated = false;
    double value = 0.0;
};

struct RolloutResult {
    std::vector<CandidateRecord> candidates;
    std::vector<UnrollTrace> traces;  // one per rb value
    int queries_used = 0;
    double best_value = 0.0;
    Eigen::VectorXd best_point;
    double median_value = 0.0;
    std::uint64_t seed = 0;

    nlohmann::json to_json(const RolloutConfig& cfg) const;
};

// One prefix per rb value (fresh substream each), suffixes of length T - P,
// oracle budget spent lower-rhat-first.
RolloutResult evaluate(const Model<float>& model, const OfflineDataset& ds, const Task& task,
                       const RolloutConfig& cfg);

// Full-length update-mode rollouts from scratch: for each conditioning R1,
// returns (R1, realized cumulative regret).
std::vector<std::pair<double, double>> irb_sweep(const Model<float>& model,
                                                 const OfflineDataset& ds, const Task& task,
                                                 const std::vector<double>& r1_values,
                                                 std::uint64_t seed);

}  // namespace bonet

#endif
