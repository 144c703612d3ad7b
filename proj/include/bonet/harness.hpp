#ifndef BONET_HARNESS_HPP
#define BONET_HARNESS_HPP

#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "bonet/config.hpp"
#include "bonet/dataset.hpp"
#include "bonet/rollout.hpp"

namespace bonet {

// Artifact paths produced by a run, all under the run's output directory.
struct RunPaths {
    std::filesystem::path root;
    std::filesystem::path dataset() const { return root / "dataset.csv"; }
    std::filesystem::path trajs() const { return root / "trajs.csv"; }
    std::filesystem::path checkpoint() const { return root / "ckpt_final.bin"; }
    std::filesystem::path loss_csv() const { return root / "loss.csv"; }
    std::filesystem::path result() const { return root / "result.json"; }
    std::filesystem::path record() const { return root / "run_record.json"; }
};

// Individual phases; each loads its input artifact and persists its output.
OfflineDataset phase_dataset(const RunConfig& cfg, const RunPaths& paths);
TrajectoryDataset phase_trajs(const RunConfig& cfg, const RunPaths& paths);
Model<float> phase_train(const RunConfig& cfg, const RunPaths& paths);
RolloutResult phase_rollout(const RunConfig& cfg, const RunPaths& paths);

// Full pipeline for one seed; returns the rollout result. Also appends the
// run record (config hash, artifact checksums, per-phase wallclock) to
// run_record.json — timing lives there so result.json stays reproducible.
RolloutResult run_pipeline(const RunConfig& cfg, const RunPaths& paths);

// Table-style comparison on the Branin task: full pipeline plus the
// gradient-ascent baseline over `seeds` seeds; writes summary.json under
// out_dir. `reduced` selects the smaller 4-layer / 64-wide model.
nlohmann::json reproduce_branin(RunConfig base, int seeds, bool reduced,
                                const std::filesystem::path& out_dir);

// Named parameter sweeps; each writes one CSV row per (value, seed) cell:
// value,seed,best,median,queries_used.
const std::vector<std::string>& ablation_names();
std::vector<std::string> default_ablation_values(const std::string& name);
void run_ablation(const std::string& name, const RunConfig& base,
                  const std::vector<std::string>& values, int seeds,
                  const std::filesystem::path& out_csv);

// CSV emission backing the figure data: value histograms of a dataset vs its
// trajectory set ("hist"), (R1, realized regret) pairs ("irb"), per-iteration
// online-GP values ("gp").
void emit_hist_csv(const OfflineDataset& ds, const TrajectoryDataset& td, int n_bins,
                   const std::filesystem::path& out_csv);
void emit_pairs_csv(const std::vector<std::pair<double, double>>& pairs,
                    const std::string& header, const std::filesystem::path& out_csv);
void emit_series_csv(const std::vector<double>& values, const std::string& header,
                     const std::filesystem::path& out_csv);

std::uint64_t file_checksum(const std::filesystem::path& path);
void write_json(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace bonet

#endif
