#ifndef BONET_TRAIN_HPP
#define BONET_TRAIN_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "bonet/model.hpp"
#include "bonet/sortsample.hpp"

namespace bonet {

struct TrainConfig {
    int batch_size = 128;
    double learning_rate = 1e-4;  // constant
    int epochs = 75;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::optional<double> grad_clip_norm = 1.0;
    std::uint64_t seed = 0;
    int checkpoint_every = 0;           // epochs between checkpoints, 0 = final only
    std::filesystem::path out_dir;      // telemetry + checkpoints; empty disables
    int threads = 1;

    void validate() const {
        if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
        if (!(learning_rate >= 0.0)) throw ConfigError("train config: bad learning rate");
        if (epochs < 1) throw ConfigError("train config: epochs must be >= 1");
    }
};

// One training window: a contiguous context_len slice of one trajectory.
struct Window {
    int traj = 0;
    int start = 0;
};

// Every (trajectory, offset) window once per epoch, shuffled.
std::vector<Window> make_epoch_windows(int num_trajs, int T, int context_len,
                                       std::uint64_t epoch_seed);

template <class S>
void assemble_batch(const TrajectoryDataset& td, const std::vector<Window>& windows,
                    std::size_t begin, std::size_t end, int context_len,
                    WindowBatch<S>& batch, Targets<S>& targets);

template <class S>
struct AdamState {
    std::vector<Mat<S>> m, v;
    long step = 0;
};

template <class S>
AdamState<S> make_adam_state(const Model<S>& model);

// Global gradient-norm clipping; returns the pre-clip norm.
template <class S>
double clip_grad_norm(ModelParams<S>& grads, double max_norm);

template <class S>
void adam_step(ModelParams<S>& params, const ModelParams<S>& grads, AdamState<S>& state,
               const TrainConfig& cfg);

struct TrainResult {
    std::vector<double> epoch_loss;  // mean training loss per epoch
    bool aborted = false;            // non-finite loss; weights restored to last good epoch
    int last_good_epoch = 0;
};

// Phase 2: epochs x minibatch Adam updates with gradient clipping. Emits
// `loss.csv` (epoch,mean_loss,wallclock_s) and `ckpt_epoch<k>.bin` +
// `ckpt_final.bin` under cfg.out_dir when set.
template <class S>
TrainResult train(Model<S>& model, const TrajectoryDataset& td, const TrainConfig& cfg);

// Reusable buffers for the batch gradient hot path.
template <class S>
struct GradWorkspace {
    WindowBatch<S> batch;
    Targets<S> targets;
    detail::ForwardCache<S> cache;
    GradResult<S> result;
};

// Parallel gradient over one batch: shards are reduced in index order, so a
// given thread count is deterministic.
template <class S>
GradResult<S>& batch_gradient(const Model<S>& model, const TrajectoryDataset& td,
                              const std::vector<Window>& windows, std::size_t begin,
                              std::size_t end, int threads, GradWorkspace<S>& ws);

extern template TrainResult train<float>(Model<float>&, const TrajectoryDataset&,
                                         const TrainConfig&);
extern template TrainResult train<double>(Model<double>&, const TrajectoryDataset&,
                                          const TrainConfig&);

}  // namespace bonet

#endif
