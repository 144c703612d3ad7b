#ifndef BONET_MODEL_HPP
#define BONET_MODEL_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "bonet/errors.hpp"
#include "bonet/functions.hpp"
#include "bonet/rng.hpp"

namespace bonet {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

struct ModelConfig {
    int embed_dim = 128;
    int n_heads = 4;
    int n_layers = 8;
    int context_len = 32;   // C: timesteps per window, two tokens each
    int max_timestep = 64;  // T: trajectory length the timestep table covers
    TaskKind kind = TaskKind::continuous;
    int dim = 2;   // d
    int vocab = 0; // V, discrete tasks
    double head_variance = 1.0;  // fixed Gaussian head variance, continuous tasks

    int x_input_dim() const {
        return kind == TaskKind::discrete ? dim * vocab : dim;
    }
    int head_out_dim() const {
        return kind == TaskKind::discrete ? dim * vocab : dim;
    }
    int head_dim() const { return embed_dim / n_heads; }
    int token_slots() const { return 2 * context_len; }

    void validate() const {
        if (embed_dim < 1 || n_heads < 1 || n_layers < 1) {
            throw ConfigError("model config: sizes must be positive");
        }
        if (embed_dim % n_heads != 0) {
            throw ConfigError("model config: embed_dim must be divisible by n_heads");
        }
        if (context_len < 1 || context_len > max_timestep) {
            throw ConfigError("model config: need 1 <= context_len <= max_timestep");
        }
        if (dim < 1) throw ConfigError("model config: dim must be >= 1");
        if (kind == TaskKind::discrete && vocab < 2) {
            throw ConfigError("model config: discrete tasks need vocab >= 2");
        }
        if (!(head_variance > 0.0)) {
            throw ConfigError("model config: head_variance must be positive");
        }
    }
};

template <class S>
struct LayerParams {
    Mat<S> ln1_g, ln1_b;
    Mat<S> w_qkv, b_qkv;   // (3E x E), (3E x 1)
    Mat<S> w_proj, b_proj; // (E x E), (E x 1)
    Mat<S> ln2_g, ln2_b;
    Mat<S> w_fc, b_fc;     // (4E x E), (4E x 1)
    Mat<S> w_down, b_down; // (E x 4E), (E x 1)
};

// All parameters are stored as matrices (biases as n x 1) so a single visitor
// covers initialization, the optimizer and serialization. Visit order is part
// of the checkpoint format.
template <class S>
struct ModelParams {
    Mat<S> w_r, b_r;        // budget-token embedding (E x 1)
    Mat<S> w_x, b_x;        // point-token embedding (E x xin)
    Mat<S> ln_e_g, ln_e_b;  // embedding layernorm
    Mat<S> pos;             // per token slot (E x 2C)
    Mat<S> time;            // per trajectory timestep (E x T)
    std::vector<LayerParams<S>> layers;
    Mat<S> ln_f_g, ln_f_b;
    Mat<S> w_head, b_head;  // (out x E), (out x 1)

    template <class F>
    void visit(F&& f) {
        f("embed_r.w", w_r);
        f("embed_r.b", b_r);
        f("embed_x.w", w_x);
        f("embed_x.b", b_x);
        f("embed_ln.g", ln_e_g);
        f("embed_ln.b", ln_e_b);
        f("pos", pos);
        f("time", time);
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const std::string prefix = "layer" + std::to_string(l) + ".";
            auto& lp = layers[l];
            f(prefix + "ln1.g", lp.ln1_g);
            f(prefix + "ln1.b", lp.ln1_b);
            f(prefix + "attn.w_qkv", lp.w_qkv);
            f(prefix + "attn.b_qkv", lp.b_qkv);
            f(prefix + "attn.w_proj", lp.w_proj);
            f(prefix + "attn.b_proj", lp.b_proj);
            f(prefix + "ln2.g", lp.ln2_g);
            f(prefix + "ln2.b", lp.ln2_b);
            f(prefix + "mlp.w_fc", lp.w_fc);
            f(prefix + "mlp.b_fc", lp.b_fc);
            f(prefix + "mlp.w_down", lp.w_down);
            f(prefix + "mlp.b_down", lp.b_down);
        }
        f("final_ln.g", ln_f_g);
        f("final_ln.b", ln_f_b);
        f("head.w", w_head);
        f("head.b", b_head);
    }

    template <class F>
    void visit(F&& f) const {
        const_cast<ModelParams<S>*>(this)->visit(
            [&f](const std::string& name, const Mat<S>& m) { f(name, m); });
    }

    std::int64_t parameter_count() const {
        std::int64_t n = 0;
        visit([&n](const std::string&, const Mat<S>& m) { n += m.size(); });
        return n;
    }

    bool all_finite() const {
        bool ok = true;
        visit([&ok](const std::string&, const Mat<S>& m) {
            if (!m.allFinite()) ok = false;
        });
        return ok;
    }
};

template <class S>
struct Model {
    ModelConfig cfg;
    ModelParams<S> params;
};

namespace detail {

template <class S>
void shape_params(const ModelConfig& cfg, ModelParams<S>& p) {
    const int E = cfg.embed_dim;
    p.w_r.setZero(E, 1);
    p.b_r.setZero(E, 1);
    p.w_x.setZero(E, cfg.x_input_dim());
    p.b_x.setZero(E, 1);
    p.ln_e_g.setOnes(E, 1);
    p.ln_e_b.setZero(E, 1);
    p.pos.setZero(E, cfg.token_slots());
    p.time.setZero(E, cfg.max_timestep);
    p.layers.resize(cfg.n_layers);
    for (auto& lp : p.layers) {
        lp.ln1_g.setOnes(E, 1);
        lp.ln1_b.setZero(E, 1);
        lp.w_qkv.setZero(3 * E, E);
        lp.b_qkv.setZero(3 * E, 1);
        lp.w_proj.setZero(E, E);
        lp.b_proj.setZero(E, 1);
        lp.ln2_g.setOnes(E, 1);
        lp.ln2_b.setZero(E, 1);
        lp.w_fc.setZero(4 * E, E);
        lp.b_fc.setZero(4 * E, 1);
        lp.w_down.setZero(E, 4 * E);
        lp.b_down.setZero(E, 1);
    }
    p.ln_f_g.setOnes(E, 1);
    p.ln_f_b.setZero(E, 1);
    p.w_head.setZero(cfg.head_out_dim(), E);
    p.b_head.setZero(cfg.head_out_dim(), 1);
}

template <class S>
void gaussian_fill(Mat<S>& m, double std, Rng& rng) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            m(r, c) = static_cast<S>(std * rng.normal());
        }
    }
}

}  // namespace detail

// Scaled Gaussian init: std 0.02 everywhere, residual output projections
// additionally scaled by 1/sqrt(2 * n_layers).
template <class S>
Model<S> init_model(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Model<S> model;
    model.cfg = cfg;
    detail::shape_params(cfg, model.params);
    Rng rng(seed_stream(seed, "model_init"));
    const double base = 0.02;
    const double residual = base / std::sqrt(2.0 * cfg.n_layers);
    auto& p = model.params;
    detail::gaussian_fill(p.w_r, base, rng);
    detail::gaussian_fill(p.w_x, base, rng);
    detail::gaussian_fill(p.pos, base, rng);
    detail::gaussian_fill(p.time, base, rng);
    for (auto& lp : p.layers) {
        detail::gaussian_fill(lp.w_qkv, base, rng);
        detail::gaussian_fill(lp.w_proj, residual, rng);
        detail::gaussian_fill(lp.w_fc, base, rng);
        detail::gaussian_fill(lp.w_down, residual, rng);
    }
    detail::gaussian_fill(p.w_head, base, rng);
    return model;
}

// A batch of equal-length windows. Window b occupies token columns
// [b*Stok, (b+1)*Stok); per-timestep matrices use column b*L + t. When
// trailing_r is set the final timestep carries only its budget token (the
// generation case).
template <class S>
struct WindowBatch {
    int n_steps = 0;    // L
    int n_windows = 0;  // B
    bool trailing_r = false;
    Mat<S> r;                 // L x B
    Mat<S> x;                 // xin x (B * Lx), Lx = L - trailing_r
    Eigen::MatrixXi steps;    // L x B, absolute 0-based trajectory timesteps

    int x_steps() const { return n_steps - (trailing_r ? 1 : 0); }
    int tokens_per_window() const { return 2 * n_steps - (trailing_r ? 1 : 0); }
};

// Training targets; continuous tasks fill `cont` (d x B*L), discrete fill
// `sym` (d x B*L).
template <class S>
struct Targets {
    Mat<S> cont;
    Eigen::MatrixXi sym;
};

namespace detail {

template <class S>
struct LayerCache {
    Mat<S> in;                      // residual stream entering the layer
    Mat<S> ln1, ln1_mu, ln1_rstd;   // stats are 1 x N
    Mat<S> qkv;                     // 3E x N
    Mat<S> attn;                    // S x (B*H*S) softmax probabilities
    Mat<S> ctx;                     // E x N
    Mat<S> ln2_in;                  // in + attention output
    Mat<S> ln2, ln2_mu, ln2_rstd;
    Mat<S> fc;                      // 4E x N pre-activation
    Mat<S> act_tanh;                // tanh term cached for the backward pass
    Mat<S> act;                     // gelu(fc)
};

template <class S>
struct ForwardCache {
    int B = 0, L = 0, Stok = 0;
    Mat<S> tok;                     // embedding sum before the embedding LN
    Mat<S> emb, emb_mu, emb_rstd;
    std::vector<LayerCache<S>> layers;
    Mat<S> lnf_in, lnf, lnf_mu, lnf_rstd;
    Mat<S> head_in;                 // E x (B*L), gathered budget-token columns
    Mat<S> pred;                    // out x (B*L)
};

template <class S>
void layernorm_forward(const Mat<S>& x, const Mat<S>& g, const Mat<S>& b, Mat<S>& y,
                       Mat<S>& mu, Mat<S>& rstd) {
    const S eps = static_cast<S>(1e-5);
    mu = x.colwise().mean();
    y = x;
    y.rowwise() -= mu.row(0);
    rstd = (y.array().square().colwise().mean() + eps).sqrt().inverse().matrix();
    y.array().rowwise() *= rstd.row(0).array();
    y.array().colwise() *= g.col(0).array();
    y.colwise() += Eigen::Matrix<S, Eigen::Dynamic, 1>(b.col(0));
}

template <class S>
void layernorm_backward(const Mat<S>& dy, const Mat<S>& x, const Mat<S>& mu,
                        const Mat<S>& rstd, const Mat<S>& g, Mat<S>& dx, Mat<S>& dg,
                        Mat<S>& db) {
    Mat<S> xhat = x;
    xhat.rowwise() -= mu.row(0);
    xhat.array().rowwise() *= rstd.row(0).array();
    Mat<S> dyh = dy;
    dyh.array().colwise() *= g.col(0).array();
    const Mat<S> mean_dyh = dyh.colwise().mean();
    const Mat<S> mean_dyh_xhat = (dyh.array() * xhat.array()).colwise().mean().matrix();
    dg.col(0) += (dy.array() * xhat.array()).rowwise().sum().matrix();
    db.col(0) += dy.rowwise().sum();
    xhat.array().rowwise() *= mean_dyh_xhat.row(0).array();
    dx = dyh - xhat;
    dx.rowwise() -= mean_dyh.row(0);
    dx.array().rowwise() *= rstd.row(0).array();
}

// tanh-approximation GELU, kept vectorizable
constexpr double kGeluC0 = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluC1 = 0.044715;

template <class S>
void gelu_forward(const Mat<S>& x, Mat<S>& tanh_u, Mat<S>& y) {
    tanh_u = (S(kGeluC0) * (x.array() + S(kGeluC1) * x.array().cube())).tanh().matrix();
    y = (S(0.5) * x.array() * (S(1) + tanh_u.array())).matrix();
}

// dy/dx given the cached tanh(u)
template <class S>
void gelu_backward(const Mat<S>& dy, const Mat<S>& x, const Mat<S>& tanh_u, Mat<S>& dx) {
    dx = (dy.array() *
          (S(0.5) * (S(1) + tanh_u.array()) +
           S(0.5) * x.array() * (S(1) - tanh_u.array().square()) * S(kGeluC0) *
               (S(1) + S(3.0 * kGeluC1) * x.array().square())))
             .matrix();
}

}  // namespace detail

// Runs the causally masked transformer over a batch of interleaved
// (budget, point) token streams. Returns one prediction per timestep, read
// from the budget-token position (out x B*L, column b*L + t). Fills `cache`
// when a backward pass will follow.
template <class S>
Mat<S> forward(const Model<S>& model, const WindowBatch<S>& batch,
               detail::ForwardCache<S>* cache = nullptr) {
    const ModelConfig& cfg = model.cfg;
    const ModelParams<S>& p = model.params;
    const int L = batch.n_steps, B = batch.n_windows;
    if (L > cfg.context_len) {
        throw ConfigError("forward: window of " + std::to_string(L) +
                          " timesteps exceeds context length " +
                          std::to_string(cfg.context_len));
    }
    if (L < 1 || B < 1) throw ConfigError("forward: empty batch");
    const int E = cfg.embed_dim;
    const int H = cfg.n_heads;
    const int Dh = cfg.head_dim();
    const int Stok = batch.tokens_per_window();
    const int Lx = batch.x_steps();
    const int N = B * Stok;
    const S scale = S(1) / std::sqrt(static_cast<S>(Dh));

    detail::ForwardCache<S> local;
    detail::ForwardCache<S>& c = cache ? *cache : local;
    c.B = B;
    c.L = L;
    c.Stok = Stok;

    // token embeddings + slot and timestep tables
    c.tok.resize(E, N);
    Mat<S> x_emb;
    if (Lx > 0) {
        x_emb.noalias() = p.w_x * batch.x;
    }
    for (int b = 0; b < B; ++b) {
        for (int t = 0; t < L; ++t) {
            const int step = batch.steps(t, b);
            const int col_r = b * Stok + 2 * t;
            c.tok.col(col_r) = p.w_r.col(0) * batch.r(t, b) + p.b_r.col(0) +
                               p.pos.col(2 * t) + p.time.col(step);
            if (t < Lx) {
                c.tok.col(col_r + 1) = x_emb.col(b * Lx + t) + p.b_x.col(0) +
                                       p.pos.col(2 * t + 1) + p.time.col(step);
            }
        }
    }
    detail::layernorm_forward(c.tok, p.ln_e_g, p.ln_e_b, c.emb, c.emb_mu, c.emb_rstd);

    c.layers.resize(cfg.n_layers);
    Mat<S> stream = c.emb;
    for (int l = 0; l < cfg.n_layers; ++l) {
        auto& lc = c.layers[l];
        const auto& lp = p.layers[l];
        lc.in = stream;
        detail::layernorm_forward(lc.in, lp.ln1_g, lp.ln1_b, lc.ln1, lc.ln1_mu, lc.ln1_rstd);
        lc.qkv.resize(3 * E, N);
        lc.qkv.noalias() = lp.w_qkv * lc.ln1;
        lc.qkv.colwise() += Eigen::Matrix<S, Eigen::Dynamic, 1>(lp.b_qkv.col(0));

        lc.attn.resize(Stok, static_cast<Eigen::Index>(B) * H * Stok);
        lc.ctx.resize(E, N);
        Mat<S> scores(Stok, Stok);
        for (int b = 0; b < B; ++b) {
            const int col0 = b * Stok;
            for (int h = 0; h < H; ++h) {
                auto q = lc.qkv.block(h * Dh, col0, Dh, Stok);
                auto k = lc.qkv.block(E + h * Dh, col0, Dh, Stok);
                auto v = lc.qkv.block(2 * E + h * Dh, col0, Dh, Stok);
                scores.noalias() = k.transpose() * q;
                auto a = lc.attn.block(0, (static_cast<Eigen::Index>(b) * H + h) * Stok,
                                       Stok, Stok);
                for (int j = 0; j < Stok; ++j) {
                    auto col = scores.col(j).head(j + 1);
                    const S m = col.maxCoeff() * scale;
                    a.col(j).head(j + 1) =
                        ((col.array() * scale) - m).exp().matrix();
                    const S z = a.col(j).head(j + 1).sum();
                    a.col(j).head(j + 1) /= z;
                    if (j + 1 < Stok) a.col(j).tail(Stok - j - 1).setZero();
                }
                lc.ctx.block(h * Dh, col0, Dh, Stok).noalias() = v * a;
            }
        }
        Mat<S> attn_out(E, N);
        attn_out.noalias() = lp.w_proj * lc.ctx;
        attn_out.colwise() += Eigen::Matrix<S, Eigen::Dynamic, 1>(lp.b_proj.col(0));
        lc.ln2_in = lc.in + attn_out;

        detail::layernorm_forward(lc.ln2_in, lp.ln2_g, lp.ln2_b, lc.ln2, lc.ln2_mu,
                                  lc.ln2_rstd);
        lc.fc.resize(4 * E, N);
        lc.fc.noalias() = lp.w_fc * lc.ln2;
        lc.fc.colwise() += Eigen::Matrix<S, Eigen::Dynamic, 1>(lp.b_fc.col(0));
        detail::gelu_forward(lc.fc, lc.act_tanh, lc.act);
        Mat<S> mlp_out(E, N);
        mlp_out.noalias() = lp.w_down * lc.act;
        mlp_out.colwise() += Eigen::Matrix<S, Eigen::Dynamic, 1>(lp.b_down.col(0));
        stream = lc.ln2_in + mlp_out;
    }

    c.lnf_in = stream;
    detail::layernorm_forward(c.lnf_in, p.ln_f_g, p.ln_f_b, c.lnf, c.lnf_mu, c.lnf_rstd);

    // predictions come from the budget-token columns
    c.head_in.resize(E, static_cast<Eigen::Index>(B) * L);
    for (int b = 0; b < B; ++b) {
        for (int t = 0; t < L; ++t) {
            c.head_in.col(b * L + t) = c.lnf.col(b * Stok + 2 * t);
        }
    }
    c.pred.resize(cfg.head_out_dim(), static_cast<Eigen::Index>(B) * L);
    c.pred.noalias() = p.w_head * c.head_in;
    c.pred.colwise() += Eigen::Matrix<S, Eigen::Dynamic, 1>(p.b_head.col(0));
    return c.pred;
}

// Mean squared error over all steps and dims.
template <class S>
double mse_loss(const Mat<S>& pred, const Mat<S>& target) {
    return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

// Mean cross-entropy over all steps and dims; logits hold `dim` stacked
// V-row blocks per column.
template <class S>
double ce_loss(const Mat<S>& logits, const Eigen::MatrixXi& sym, int vocab) {
    const int d = static_cast<int>(sym.rows());
    const Eigen::Index n = logits.cols();
    double total = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        for (int k = 0; k < d; ++k) {
            auto block = logits.col(j).segment(k * vocab, vocab);
            const S m = block.maxCoeff();
            const double lse =
                std::log(static_cast<double>((block.array() - m).exp().sum())) +
                static_cast<double>(m);
            total += lse - static_cast<double>(block(sym(k, j)));
        }
    }
    return total / (static_cast<double>(d) * n);
}

template <class S>
struct GradResult {
    double loss = 0.0;
    ModelParams<S> grads;
};

template <class S>
ModelParams<S> zeros_like(const Model<S>& model) {
    ModelParams<S> g;
    detail::shape_params(model.cfg, g);
    g.visit([](const std::string&, Mat<S>& m) { m.setZero(); });
    return g;
}

// Forward + loss + full reverse pass. Throws GradientError on non-finite loss.
// The cache/result overload reuses buffers across calls.
template <class S>
void loss_and_grad_into(const Model<S>& model, const WindowBatch<S>& batch,
                        const Targets<S>& targets, detail::ForwardCache<S>& c,
                        GradResult<S>& result) {
    const ModelConfig& cfg = model.cfg;
    const ModelParams<S>& p = model.params;
    forward(model, batch, &c);

    const int B = c.B, L = c.L, Stok = c.Stok;
    const int E = cfg.embed_dim;
    const int H = cfg.n_heads;
    const int Dh = cfg.head_dim();
    const int N = B * Stok;
    const int Lx = batch.x_steps();
    const S scale = S(1) / std::sqrt(static_cast<S>(Dh));

    if (result.grads.parameter_count() != p.parameter_count()) {
        detail::shape_params(model.cfg, result.grads);
    }
    result.grads.visit([](const std::string&, Mat<S>& m) { m.setZero(); });
    ModelParams<S>& g = result.grads;

    // loss and dPred
    Mat<S> dpred(c.pred.rows(), c.pred.cols());
    if (cfg.kind == TaskKind::continuous) {
        result.loss = mse_loss(c.pred, targets.cont);
        dpred = (c.pred - targets.cont) * static_cast<S>(2.0 / c.pred.size());
    } else {
        result.loss = ce_loss(c.pred, targets.sym, cfg.vocab);
        const S inv = S(1) / static_cast<S>(static_cast<double>(cfg.dim) * c.pred.cols());
        for (Eigen::Index j = 0; j < c.pred.cols(); ++j) {
            for (int k = 0; k < cfg.dim; ++k) {
                auto block = c.pred.col(j).segment(k * cfg.vocab, cfg.vocab);
                const S m = block.maxCoeff();
                Eigen::Array<S, Eigen::Dynamic, 1> e = (block.array() - m).exp();
                e /= e.sum();
                dpred.col(j).segment(k * cfg.vocab, cfg.vocab) = e.matrix() * inv;
                dpred(k * cfg.vocab + targets.sym(k, j), j) -= inv;
            }
        }
    }
    if (!std::isfinite(result.loss)) {
        throw GradientError("non-finite loss on batch of " + std::to_string(B) +
                            " windows x " + std::to_string(L) + " steps");
    }

    // head
    g.w_head.noalias() += dpred * c.head_in.transpose();
    g.b_head.col(0) += dpred.rowwise().sum();
    Mat<S> dlnf = Mat<S>::Zero(E, N);
    {
        Mat<S> dhead_in(E, c.head_in.cols());
        dhead_in.noalias() = p.w_head.transpose() * dpred;
        for (int b = 0; b < B; ++b) {
            for (int t = 0; t < L; ++t) {
                dlnf.col(b * Stok + 2 * t) += dhead_in.col(b * L + t);
            }
        }
    }

    Mat<S> dstream;
    detail::layernorm_backward(dlnf, c.lnf_in, c.lnf_mu, c.lnf_rstd, p.ln_f_g, dstream,
                               g.ln_f_g, g.ln_f_b);

    Mat<S> scratch_scores(Stok, Stok);
    for (int l = cfg.n_layers - 1; l >= 0; --l) {
        const auto& lc = c.layers[l];
        const auto& lp = p.layers[l];
        auto& lg = g.layers[l];

        // mlp
        Mat<S> dact(4 * E, N);
        dact.noalias() = lp.w_down.transpose() * dstream;
        lg.w_down.noalias() += dstream * lc.act.transpose();
        lg.b_down.col(0) += dstream.rowwise().sum();
        Mat<S> dfc;
        detail::gelu_backward(dact, lc.fc, lc.act_tanh, dfc);
        lg.w_fc.noalias() += dfc * lc.ln2.transpose();
        lg.b_fc.col(0) += dfc.rowwise().sum();
        Mat<S> dln2(E, N);
        dln2.noalias() = lp.w_fc.transpose() * dfc;

        Mat<S> dln2_in;
        detail::layernorm_backward(dln2, lc.ln2_in, lc.ln2_mu, lc.ln2_rstd, lp.ln2_g,
                                   dln2_in, lg.ln2_g, lg.ln2_b);
        dln2_in += dstream;  // residual

        // attention
        Mat<S> dctx(E, N);
        dctx.noalias() = lp.w_proj.transpose() * dln2_in;
        lg.w_proj.noalias() += dln2_in * lc.ctx.transpose();
        lg.b_proj.col(0) += dln2_in.rowwise().sum();

        Mat<S> dqkv = Mat<S>::Zero(3 * E, N);
        for (int b = 0; b < B; ++b) {
            const int col0 = b * Stok;
            for (int h = 0; h < H; ++h) {
                auto q = lc.qkv.block(h * Dh, col0, Dh, Stok);
                auto k = lc.qkv.block(E + h * Dh, col0, Dh, Stok);
                auto v = lc.qkv.block(2 * E + h * Dh, col0, Dh, Stok);
                auto a = lc.attn.block(0, (static_cast<Eigen::Index>(b) * H + h) * Stok,
                                       Stok, Stok);
                auto dctx_b = dctx.block(h * Dh, col0, Dh, Stok);
                // ctx = v * a
                Mat<S>& da = scratch_scores;
                da.noalias() = v.transpose() * dctx_b;
                dqkv.block(2 * E + h * Dh, col0, Dh, Stok).noalias() +=
                    dctx_b * a.transpose();
                // softmax backward, then the 1/sqrt(Dh) score scale
                for (int j = 0; j < Stok; ++j) {
                    auto aj = a.col(j).head(j + 1);
                    auto daj = da.col(j).head(j + 1);
                    const S dot = (aj.array() * daj.array()).sum();
                    da.col(j).head(j + 1) =
                        (aj.array() * (daj.array() - dot)).matrix() * scale;
                    if (j + 1 < Stok) da.col(j).tail(Stok - j - 1).setZero();
                }
                // scores = k^T q
                dqkv.block(h * Dh, col0, Dh, Stok).noalias() += k * da;
                dqkv.block(E + h * Dh, col0, Dh, Stok).noalias() += q * da.transpose();
            }
        }
        lg.w_qkv.noalias() += dqkv * lc.ln1.transpose();
        lg.b_qkv.col(0) += dqkv.rowwise().sum();
        Mat<S> dln1(E, N);
        dln1.noalias() = lp.w_qkv.transpose() * dqkv;

        Mat<S> din;
        detail::layernorm_backward(dln1, lc.in, lc.ln1_mu, lc.ln1_rstd, lp.ln1_g, din,
                                   lg.ln1_g, lg.ln1_b);
        din += dln2_in;  // residual
        dstream = std::move(din);
    }

    // embedding layernorm
    Mat<S> dtok;
    detail::layernorm_backward(dstream, c.tok, c.emb_mu, c.emb_rstd, p.ln_e_g, dtok,
                               g.ln_e_g, g.ln_e_b);

    // scatter back into the embedding tables
    Mat<S> dx_tok(E, static_cast<Eigen::Index>(B) * std::max(Lx, 1));
    for (int b = 0; b < B; ++b) {
        for (int t = 0; t < L; ++t) {
            const int step = batch.steps(t, b);
            const int col_r = b * Stok + 2 * t;
            g.w_r.col(0) += dtok.col(col_r) * batch.r(t, b);
            g.b_r.col(0) += dtok.col(col_r);
            g.pos.col(2 * t) += dtok.col(col_r);
            g.time.col(step) += dtok.col(col_r);
            if (t < Lx) {
                dx_tok.col(b * Lx + t) = dtok.col(col_r + 1);
                g.b_x.col(0) += dtok.col(col_r + 1);
                g.pos.col(2 * t + 1) += dtok.col(col_r + 1);
                g.time.col(step) += dtok.col(col_r + 1);
            }
        }
    }
    if (Lx > 0) {
        g.w_x.noalias() += dx_tok.leftCols(static_cast<Eigen::Index>(B) * Lx) *
                           batch.x.transpose();
    }
}

template <class S>
GradResult<S> loss_and_grad(const Model<S>& model, const WindowBatch<S>& batch,
                            const Targets<S>& targets) {
    detail::ForwardCache<S> cache;
    GradResult<S> result;
    loss_and_grad_into(model, batch, targets, cache, result);
    return result;
}

enum class DecodeMode { greedy, sample };

// Autoregressive next-point prediction from a context of budgets r[0..t-1]
// and points x[0..t-2] with absolute timesteps `steps`. Only the last
// context_len timesteps are fed; timestep embeddings keep absolute indices.
template <class S>
Eigen::VectorXd predict_next(const Model<S>& model, const std::vector<double>& r,
                             const std::vector<Eigen::VectorXd>& x,
                             const std::vector<int>& steps, DecodeMode mode,
                             double temperature, Rng* rng) {
    const ModelConfig& cfg = model.cfg;
    if (r.size() != x.size() + 1 || r.size() != steps.size()) {
        throw ConfigError("predict_next: need one more budget than points");
    }
    const int total = static_cast<int>(r.size());
    const int W = std::min(total, cfg.context_len);
    const int offset = total - W;

    WindowBatch<S> batch;
    batch.n_steps = W;
    batch.n_windows = 1;
    batch.trailing_r = true;
    batch.r.resize(W, 1);
    batch.steps.resize(W, 1);
    batch.x.resize(cfg.x_input_dim(), W - 1);
    batch.x.setZero();
    for (int t = 0; t < W; ++t) {
        batch.r(t, 0) = static_cast<S>(r[offset + t]);
        batch.steps(t, 0) = std::min(steps[offset + t], cfg.max_timestep - 1);
        if (t < W - 1) {
            const Eigen::VectorXd& xt = x[offset + t];
            if (cfg.kind == TaskKind::discrete) {
                for (int k = 0; k < cfg.dim; ++k) {
                    batch.x(k * cfg.vocab + static_cast<int>(xt[k]), t) = S(1);
                }
            } else {
                for (int k = 0; k < cfg.dim; ++k) batch.x(k, t) = static_cast<S>(xt[k]);
            }
        }
    }
    Mat<S> pred = forward(model, batch);
    Eigen::Matrix<S, Eigen::Dynamic, 1> out = pred.col(W - 1);

    Eigen::VectorXd next(cfg.dim);
    if (cfg.kind == TaskKind::continuous) {
        for (int k = 0; k < cfg.dim; ++k) next[k] = static_cast<double>(out[k]);
        if (mode == DecodeMode::sample) {
            if (!rng) throw ConfigError("predict_next: sampling needs an Rng");
            const double noise_std = std::sqrt(cfg.head_variance) * temperature;
            for (int k = 0; k < cfg.dim; ++k) next[k] += noise_std * rng->normal();
        }
        return next;
    }
    for (int k = 0; k < cfg.dim; ++k) {
        auto block = out.segment(k * cfg.vocab, cfg.vocab);
        if (mode == DecodeMode::greedy || temperature <= 0.0) {
            Eigen::Index best;
            block.maxCoeff(&best);
            next[k] = static_cast<double>(best);
        } else {
            if (!rng) throw ConfigError("predict_next: sampling needs an Rng");
            Eigen::ArrayXd logits = block.template cast<double>().array() / temperature;
            logits -= logits.maxCoeff();
            Eigen::ArrayXd probs = logits.exp();
            probs /= probs.sum();
            double u = rng->uniform01();
            int pick = cfg.vocab - 1;
            for (int v = 0; v < cfg.vocab; ++v) {
                u -= probs[v];
                if (u <= 0.0) {
                    pick = v;
                    break;
                }
            }
            next[k] = static_cast<double>(pick);
        }
    }
    return next;
}

using ModelF = Model<float>;
using ModelD = Model<double>;

}  // namespace bonet

#endif
