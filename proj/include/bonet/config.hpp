#ifndef BONET_CONFIG_HPP
#define BONET_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>

#include "bonet/model.hpp"
#include "bonet/rollout.hpp"
#include "bonet/sortsample.hpp"
#include "bonet/train.hpp"

namespace bonet {

// Dataset-construction knobs (applied in this order: generate, noise,
// withhold, normalize).
struct DatasetConfig {
    int n_raw = 5000;
    double cut_fraction = 0.1;
    double noise_scale = 0.0;
    double withhold_fraction = 0.0;
    WithholdMode withhold_mode = WithholdMode::top;
    bool normalize = false;
    double norm_y_min = 0.0, norm_y_max = 1.0;
};

// Everything one experiment needs, with per-task defaults baked in.
struct RunConfig {
    std::string task = "branin";
    DatasetConfig dataset;
    SortSampleParams sortsample;
    ModelConfig model;
    TrainConfig train;
    RolloutConfig rollout;
    std::filesystem::path out_dir = "bonet_out";
    std::uint64_t seed = 1;
    int threads = 1;

    void validate() const;
    nlohmann::json to_json() const;
    std::uint64_t config_hash() const;
};

// Defaults for a registered task (architecture, trajectory counts, rollout).
RunConfig default_config(const std::string& task_name);

// Flat key = value text format with [section] headers mirroring the module
// names: [run], [dataset], [sortsample], [model], [train], [rollout].
RunConfig load_config_file(const std::filesystem::path& path);
void apply_config_line(RunConfig& cfg, const std::string& section, const std::string& key,
                       const std::string& value);

}  // namespace bonet

#endif
