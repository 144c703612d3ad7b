#include "bonet/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "bonet/checkpoint.hpp"
#include "bonet/errors.hpp"
#include "bonet/rng.hpp"

namespace bonet {

std::vector<Window> make_epoch_windows(int num_trajs, int T, int context_len,
                                       std::uint64_t epoch_seed) {
    if (T < context_len) {
        throw ConfigError("make_epoch_windows: trajectory length below context length");
    }
    const int starts = T - context_len + 1;
    std::vector<Window> windows;
    windows.reserve(static_cast<std::size_t>(num_trajs) * starts);
    for (int traj = 0; traj < num_trajs; ++traj) {
        for (int s = 0; s < starts; ++s) windows.push_back({traj, s});
    }
    Rng rng(epoch_seed);
    rng.shuffle(windows);
    return windows;
}

template <class S>
void assemble_batch(const TrajectoryDataset& td, const std::vector<Window>& windows,
                    std::size_t begin, std::size_t end, int context_len,
                    WindowBatch<S>& batch, Targets<S>& targets) {
    const int B = static_cast<int>(end - begin);
    const int L = context_len;
    const int d = td.task.dim;
    const bool discrete = td.task.kind == TaskKind::discrete;
    const int vocab = td.task.vocab;
    const int xin = discrete ? d * vocab : d;

    batch.n_steps = L;
    batch.n_windows = B;
    batch.trailing_r = false;
    batch.r.resize(L, B);
    batch.steps.resize(L, B);
    batch.x.setZero(xin, static_cast<Eigen::Index>(B) * L);
    if (discrete) {
        targets.sym.resize(d, static_cast<Eigen::Index>(B) * L);
    } else {
        targets.cont.resize(d, static_cast<Eigen::Index>(B) * L);
    }

    for (int b = 0; b < B; ++b) {
        const Window& w = windows[begin + b];
        const Trajectory& traj = td.trajectories[w.traj];
        for (int t = 0; t < L; ++t) {
            const int src = w.start + t;
            batch.r(t, b) = static_cast<S>(traj.budgets[src]);
            batch.steps(t, b) = src;
            const Eigen::Index col = static_cast<Eigen::Index>(b) * L + t;
            if (discrete) {
                for (int k = 0; k < d; ++k) {
                    const int sym = static_cast<int>(traj.points(src, k));
                    batch.x(k * vocab + sym, col) = S(1);
                    targets.sym(k, col) = sym;
                }
            } else {
                for (int k = 0; k < d; ++k) {
                    const S v = static_cast<S>(traj.points(src, k));
                    batch.x(k, col) = v;
                    targets.cont(k, col) = v;
                }
            }
        }
    }
}

template <class S>
AdamState<S> make_adam_state(const Model<S>& model) {
    AdamState<S> state;
    model.params.visit([&state](const std::string&, const Mat<S>& m) {
        state.m.push_back(Mat<S>::Zero(m.rows(), m.cols()));
        state.v.push_back(Mat<S>::Zero(m.rows(), m.cols()));
    });
    return state;
}

template <class S>
double clip_grad_norm(ModelParams<S>& grads, double max_norm) {
    double sq = 0.0;
    grads.visit([&sq](const std::string&, const Mat<S>& m) {
        sq += static_cast<double>(m.squaredNorm());
    });
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const S factor = static_cast<S>(max_norm / norm);
        grads.visit([factor](const std::string&, Mat<S>& m) { m *= factor; });
    }
    return norm;
}

template <class S>
void adam_step(ModelParams<S>& params, const ModelParams<S>& grads, AdamState<S>& state,
               const TrainConfig& cfg) {
    ++state.step;
    const S b1 = static_cast<S>(cfg.beta1);
    const S b2 = static_cast<S>(cfg.beta2);
    const S eps = static_cast<S>(cfg.adam_eps);
    const S corr1 = static_cast<S>(1.0 - std::pow(cfg.beta1, state.step));
    const S corr2 = static_cast<S>(1.0 - std::pow(cfg.beta2, state.step));
    const S lr = static_cast<S>(cfg.learning_rate);

    std::size_t i = 0;
    std::vector<const Mat<S>*> gs;
    grads.visit([&gs](const std::string&, const Mat<S>& m) { gs.push_back(&m); });
    params.visit([&](const std::string&, Mat<S>& w) {
        const Mat<S>& g = *gs[i];
        Mat<S>& m = state.m[i];
        Mat<S>& v = state.v[i];
        m = b1 * m + (S(1) - b1) * g;
        v = b2 * v.array().matrix() + (S(1) - b2) * g.array().square().matrix();
        w.array() -= lr * (m.array() / corr1) /
                     ((v.array() / corr2).sqrt() + eps);
        ++i;
    });
}

template <class S>
GradResult<S>& batch_gradient(const Model<S>& model, const TrajectoryDataset& td,
                              const std::vector<Window>& windows, std::size_t begin,
                              std::size_t end, int threads, GradWorkspace<S>& ws) {
    const std::size_t count = end - begin;
    const int shards = std::max(1, std::min<int>(threads, static_cast<int>(count)));
    if (shards == 1) {
        assemble_batch(td, windows, begin, end, model.cfg.context_len, ws.batch, ws.targets);
        loss_and_grad_into(model, ws.batch, ws.targets, ws.cache, ws.result);
        return ws.result;
    }

    std::vector<GradResult<S>> partial(shards);
    std::vector<std::size_t> sizes(shards);
    std::vector<std::thread> pool;
    pool.reserve(shards);
    for (int s = 0; s < shards; ++s) {
        const std::size_t lo = begin + count * s / shards;
        const std::size_t hi = begin + count * (s + 1) / shards;
        sizes[s] = hi - lo;
        pool.emplace_back([&, s, lo, hi] {
            WindowBatch<S> batch;
            Targets<S> targets;
            assemble_batch(td, windows, lo, hi, model.cfg.context_len, batch, targets);
            partial[s] = loss_and_grad(model, batch, targets);
        });
    }
    for (auto& t : pool) t.join();

    // fixed shard order keeps the reduction deterministic for a thread count
    if (ws.result.grads.parameter_count() != model.params.parameter_count()) {
        detail::shape_params(model.cfg, ws.result.grads);
    }
    ws.result.loss = 0.0;
    ws.result.grads.visit([](const std::string&, Mat<S>& m) { m.setZero(); });
    for (int s = 0; s < shards; ++s) {
        const S weight = static_cast<S>(static_cast<double>(sizes[s]) / count);
        ws.result.loss += partial[s].loss * (static_cast<double>(sizes[s]) / count);
        std::size_t i = 0;
        std::vector<const Mat<S>*> gs;
        partial[s].grads.visit([&gs](const std::string&, const Mat<S>& m) { gs.push_back(&m); });
        ws.result.grads.visit([&](const std::string&, Mat<S>& m) { m += weight * (*gs[i++]); });
    }
    return ws.result;
}

template <class S>
TrainResult train(Model<S>& model, const TrajectoryDataset& td, const TrainConfig& cfg) {
    cfg.validate();
#if defined(__GLIBC__)
    // keep large activation buffers inside the arena instead of mmap round trips
    mallopt(M_MMAP_THRESHOLD, 512 * 1024 * 1024);
#endif
    if (td.num_trajs() < 1) throw ConfigError("train: empty trajectory dataset");
    if (td.T < model.cfg.context_len) {
        throw ConfigError("train: trajectories shorter than the model context");
    }

    const bool emit = !cfg.out_dir.empty();
    std::ofstream telemetry;
    if (emit) {
        std::filesystem::create_directories(cfg.out_dir);
        telemetry.open(cfg.out_dir / "loss.csv");
        telemetry << "epoch,mean_loss,wallclock_s\n";
    }

    auto save_as_float = [&](const std::filesystem::path& path) {
        if constexpr (std::is_same_v<S, float>) {
            save_checkpoint(model, path);
        } else {
            Model<float> copy;
            copy.cfg = model.cfg;
            detail::shape_params(copy.cfg, copy.params);
            std::size_t i = 0;
            std::vector<const Mat<S>*> src;
            model.params.visit([&src](const std::string&, const Mat<S>& m) { src.push_back(&m); });
            copy.params.visit([&](const std::string&, Mat<float>& m) {
                m = src[i++]->template cast<float>();
            });
            save_checkpoint(copy, path);
        }
    };

    AdamState<S> adam = make_adam_state(model);
    TrainResult result;
    ModelParams<S> last_good = model.params;
    GradWorkspace<S> ws;
    const auto t0 = std::chrono::steady_clock::now();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto windows = make_epoch_windows(td.num_trajs(), td.T, model.cfg.context_len,
                                          seed_stream(cfg.seed, "epoch", epoch));
        double loss_sum = 0.0;
        std::size_t loss_count = 0;
        try {
            for (std::size_t pos = 0; pos < windows.size(); pos += cfg.batch_size) {
                const std::size_t end = std::min(windows.size(),
                                                 pos + static_cast<std::size_t>(cfg.batch_size));
                GradResult<S>& g =
                    batch_gradient(model, td, windows, pos, end, cfg.threads, ws);
                if (cfg.grad_clip_norm) clip_grad_norm(g.grads, *cfg.grad_clip_norm);
                adam_step(model.params, g.grads, adam, cfg);
                loss_sum += g.loss * static_cast<double>(end - pos);
                loss_count += end - pos;
            }
        } catch (const GradientError&) {
            model.params = last_good;
            result.aborted = true;
            result.last_good_epoch = epoch;  // 1-based count of completed epochs
            break;
        }
        const double mean_loss = loss_sum / static_cast<double>(loss_count);
        result.epoch_loss.push_back(mean_loss);
        result.last_good_epoch = epoch + 1;
        last_good = model.params;
        if (emit) {
            const double wall =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            telemetry << epoch + 1 << "," << mean_loss << "," << wall << "\n";
            telemetry.flush();
            if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0) {
                save_as_float(cfg.out_dir / ("ckpt_epoch" + std::to_string(epoch + 1) + ".bin"));
            }
        }
    }
    if (emit) save_as_float(cfg.out_dir / "ckpt_final.bin");
    return result;
}

template void assemble_batch<float>(const TrajectoryDataset&, const std::vector<Window>&,
                                    std::size_t, std::size_t, int, WindowBatch<float>&,
                                    Targets<float>&);
template void assemble_batch<double>(const TrajectoryDataset&, const std::vector<Window>&,
                                     std::size_t, std::size_t, int, WindowBatch<double>&,
                                     Targets<double>&);
template AdamState<float> make_adam_state<float>(const Model<float>&);
template AdamState<double> make_adam_state<double>(const Model<double>&);
template double clip_grad_norm<float>(ModelParams<float>&, double);
template double clip_grad_norm<double>(ModelParams<double>&, double);
template void adam_step<float>(ModelParams<float>&, const ModelParams<float>&,
                               AdamState<float>&, const TrainConfig&);
template void adam_step<double>(ModelParams<double>&, const ModelParams<double>&,
                                AdamState<double>&, const TrainConfig&);
template GradResult<float>& batch_gradient<float>(const Model<float>&, const TrajectoryDataset&,
                                                  const std::vector<Window>&, std::size_t,
                                                  std::size_t, int, GradWorkspace<float>&);
template GradResult<double>& batch_gradient<double>(const Model<double>&,
                                                    const TrajectoryDataset&,
                                                    const std::vector<Window>&, std::size_t,
                                                    std::size_t, int, GradWorkspace<double>&);
template TrainResult train<float>(Model<float>&, const TrajectoryDataset&, const TrainConfig&);
template TrainResult train<double>(Model<double>&, const TrajectoryDataset&, const TrainConfig&);

}  // namespace bonet
