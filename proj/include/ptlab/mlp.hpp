#pragma once

#include <cfloat>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ptlab/common.hpp"
#include "ptlab/dense.hpp"

namespace ptlab {

/// Two-layer ReLU network with the softmax folded into the output:
/// F = softmax(ReLU(X W1 + b1) W2 + b2), rows of F are class probabilities.
struct MLPConfig {
    Index in_dim = 0;
    Index hidden = 64;
    Index out_dim = 0;
    Real dropout = 0.0;  // inverted dropout on input and hidden activations
    std::uint64_t init_seed = 0;

    void check() const {
        if (in_dim <= 0 || out_dim <= 0) throw std::invalid_argument("MLPConfig: dimensions unset");
        if (hidden < 1) throw std::invalid_argument("MLPConfig: hidden must be >= 1");
        if (!(dropout >= 0.0 && dropout < 1.0))
            throw std::invalid_argument("MLPConfig: dropout must be in [0,1)");
    }
};

/// Parameters plus Adam moment buffers. Owned by exactly one training run.
struct PredictorState {
    MLPConfig cfg;
    Matrix w1;  // in_dim x hidden
    Matrix w2;  // hidden x out_dim
    std::vector<Real> b1, b2;

    Matrix adam_m_w1, adam_v_w1, adam_m_w2, adam_v_w2;
    std::vector<Real> adam_m_b1, adam_v_b1, adam_m_b2, adam_v_b2;
    long step = 0;
};

struct Gradients {
    Matrix w1, w2;
    std::vector<Real> b1, b2;
};

enum class ForwardMode { train, eval };

/// Everything backward needs to replay the forward pass: pre-activation,
/// post-dropout hidden activations, probabilities, and the dropout masks.
struct ForwardCache {
    Matrix z1;     // n x hidden, pre-ReLU
    Matrix a1;     // n x hidden, post-ReLU, post-dropout
    Matrix probs;  // n x out_dim, rows sum to 1
    std::vector<std::uint8_t> mask_in;      // empty unless train-mode dropout
    std::vector<std::uint8_t> mask_hidden;  // empty unless train-mode dropout
    Real keep_prob = 1.0;
};

/// Glorot-uniform weights, zero biases, zero Adam moments. Bitwise
/// deterministic for a fixed init_seed.
inline PredictorState init_params(const MLPConfig& cfg) {
    cfg.check();
    PredictorState s;
    s.cfg = cfg;
    Rng rng(mix_seed(cfg.init_seed, 0x61e0));

    auto glorot = [&rng](Matrix& w, Index fan_in, Index fan_out) {
        const Real bound = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<Real> u(-bound, bound);
        w = Matrix(fan_in, fan_out);
        for (Real& v : w.data) v = u(rng);
    };
    glorot(s.w1, cfg.in_dim, cfg.hidden);
    glorot(s.w2, cfg.hidden, cfg.out_dim);
    s.b1.assign(cfg.hidden, 0.0);
    s.b2.assign(cfg.out_dim, 0.0);

    s.adam_m_w1 = Matrix(cfg.in_dim, cfg.hidden);
    s.adam_v_w1 = Matrix(cfg.in_dim, cfg.hidden);
    s.adam_m_w2 = Matrix(cfg.hidden, cfg.out_dim);
    s.adam_v_w2 = Matrix(cfg.hidden, cfg.out_dim);
    s.adam_m_b1.assign(cfg.hidden, 0.0);
    s.adam_v_b1.assign(cfg.hidden, 0.0);
    s.adam_m_b2.assign(cfg.out_dim, 0.0);
    s.adam_v_b2.assign(cfg.out_dim, 0.0);
    return s;
}

namespace detail {

inline void softmax_rows(Matrix& m) {
    for (Index i = 0; i < m.rows; ++i) {
        Real* r = m.row(i);
        Real mx = r[0];
        for (Index j = 1; j < m.cols; ++j) mx = std::max(mx, r[j]);
        Real sum = 0.0;
        for (Index j = 0; j < m.cols; ++j) {
            r[j] = std::exp(r[j] - mx);
            sum += r[j];
        }
        for (Index j = 0; j < m.cols; ++j) r[j] /= sum;
    }
}

inline void apply_dropout(Matrix& m, std::vector<std::uint8_t>& mask, Real keep_prob, Rng& rng) {
    mask.resize(m.data.size());
    std::uniform_real_distribution<Real> u(0.0, 1.0);
    const Real scale = 1.0 / keep_prob;
    for (std::size_t i = 0; i < m.data.size(); ++i) {
        const bool keep = u(rng) < keep_prob;
        mask[i] = keep ? 1 : 0;
        m.data[i] = keep ? m.data[i] * scale : 0.0;
    }
}

} // namespace detail

/// Forward pass. Train mode applies inverted dropout to the input and the
/// hidden activations, seeded by dropout_seed; eval mode applies none.
inline ForwardCache forward(const PredictorState& s, const Matrix& x, ForwardMode mode,
                            std::uint64_t dropout_seed = 0) {
    if (x.cols != s.cfg.in_dim) throw std::invalid_argument("forward: feature dimension mismatch");
    if (!x.all_finite()) throw std::invalid_argument("forward: non-finite input features");

    ForwardCache cache;
    const bool drop = (mode == ForwardMode::train && s.cfg.dropout > 0.0);
    cache.keep_prob = 1.0 - s.cfg.dropout;
    Rng rng(mix_seed(dropout_seed, 0xd509));

    Matrix xin = x;
    if (drop) detail::apply_dropout(xin, cache.mask_in, cache.keep_prob, rng);

    cache.z1 = matmul(xin, s.w1);
    for (Index i = 0; i < cache.z1.rows; ++i) {
        Real* r = cache.z1.row(i);
        for (Index j = 0; j < cache.z1.cols; ++j) r[j] += s.b1[j];
    }
    cache.a1 = cache.z1;
    for (Real& v : cache.a1.data) v = std::max(v, 0.0);
    if (drop) detail::apply_dropout(cache.a1, cache.mask_hidden, cache.keep_prob, rng);

    cache.probs = matmul(cache.a1, s.w2);
    for (Index i = 0; i < cache.probs.rows; ++i) {
        Real* r = cache.probs.row(i);
        for (Index j = 0; j < cache.probs.cols; ++j) r[j] += s.b2[j];
    }
    detail::softmax_rows(cache.probs);
    return cache;
}

namespace detail {

/// Shared tail of both backward entry points: from dL/dZ2 (logit gradient)
/// down to the four parameter gradients, replaying the forward's dropout.
inline Gradients backward_from_logits(const PredictorState& s, const Matrix& x,
                                      const ForwardCache& cache, const Matrix& d_z2) {
    Gradients g;
    g.w2 = matmul_at_b(cache.a1, d_z2);
    g.b2.assign(s.cfg.out_dim, 0.0);
    for (Index i = 0; i < d_z2.rows; ++i) {
        const Real* r = d_z2.row(i);
        for (Index j = 0; j < d_z2.cols; ++j) g.b2[j] += r[j];
    }

    Matrix d_a1 = matmul_a_bt(d_z2, s.w2);  // dZ2 * W2^T
    const bool drop = !cache.mask_hidden.empty();
    const Real scale = 1.0 / cache.keep_prob;
    for (std::size_t i = 0; i < d_a1.data.size(); ++i) {
        Real v = d_a1.data[i];
        if (drop) v = cache.mask_hidden[i] ? v * scale : 0.0;
        d_a1.data[i] = (cache.z1.data[i] > 0.0) ? v : 0.0;
    }

    if (!cache.mask_in.empty()) {
        Matrix xin = x;
        for (std::size_t i = 0; i < xin.data.size(); ++i)
            xin.data[i] = cache.mask_in[i] ? xin.data[i] * scale : 0.0;
        g.w1 = matmul_at_b(xin, d_a1);
    } else {
        g.w1 = matmul_at_b(x, d_a1);
    }
    g.b1.assign(s.cfg.hidden, 0.0);
    for (Index i = 0; i < d_a1.rows; ++i) {
        const Real* r = d_a1.row(i);
        for (Index j = 0; j < d_a1.cols; ++j) g.b1[j] += r[j];
    }
    return g;
}

} // namespace detail

/// Gradients of L = -sum_{i,k} c_{ik} log F_{ik} for nonnegative constant
/// coefficients c. Softmax and cross-entropy fuse:
///   dL/dz2 = F * rowsum(c) - c.
inline Gradients backward_weighted_ce(const PredictorState& s, const Matrix& x,
                                      const ForwardCache& cache, const Matrix& coeffs) {
    if (!coeffs.same_shape(cache.probs)) throw std::invalid_argument("backward: coefficient shape");
    if (!coeffs.all_finite()) throw std::invalid_argument("backward: non-finite coefficients");
    Matrix d_z2(coeffs.rows, coeffs.cols);
    for (Index i = 0; i < coeffs.rows; ++i) {
        const Real* crow = coeffs.row(i);
        const Real* frow = cache.probs.row(i);
        Real* drow = d_z2.row(i);
        Real csum = 0.0;
        for (Index j = 0; j < coeffs.cols; ++j) csum += crow[j];
        for (Index j = 0; j < coeffs.cols; ++j) drow[j] = frow[j] * csum - crow[j];
    }
    return detail::backward_from_logits(s, x, cache, d_z2);
}

/// Gradients given dL/dF on the probabilities; chains through the softmax
/// Jacobian: dL/dz_im = F_im (G_im - sum_k G_ik F_ik).
inline Gradients backward_from_probs(const PredictorState& s, const Matrix& x,
                                     const ForwardCache& cache, const Matrix& grad_probs) {
    if (!grad_probs.same_shape(cache.probs)) throw std::invalid_argument("backward: gradient shape");
    Matrix d_z2(grad_probs.rows, grad_probs.cols);
    for (Index i = 0; i < grad_probs.rows; ++i) {
        const Real* grow = grad_probs.row(i);
        const Real* frow = cache.probs.row(i);
        Real* drow = d_z2.row(i);
        Real dot = 0.0;
        for (Index j = 0; j < grad_probs.cols; ++j) dot += grow[j] * frow[j];
        for (Index j = 0; j < grad_probs.cols; ++j) drow[j] = frow[j] * (grow[j] - dot);
    }
    return detail::backward_from_logits(s, x, cache, d_z2);
}

namespace detail {

inline void adam_update(std::vector<Real>& param, std::vector<Real>& m, std::vector<Real>& v,
                        const std::vector<Real>& grad, Real lr, long t) {
    constexpr Real beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    const Real bc1 = 1.0 - std::pow(beta1, static_cast<Real>(t));
    const Real bc2 = 1.0 - std::pow(beta2, static_cast<Real>(t));
    for (std::size_t i = 0; i < param.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
        param[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
}

} // namespace detail

/// One Adam step (beta1=0.9, beta2=0.999, eps=1e-8). The L2 penalty on the
/// first layer enters as 2 * weight_decay_w1 * W1 added to W1's gradient.
inline void adam_step(PredictorState& s, const Gradients& grads, Real lr, Real weight_decay_w1) {
    auto finite = [](const std::vector<Real>& v) {
        for (Real x : v)
            if (!std::isfinite(x)) return false;
        return true;
    };
    if (!grads.w1.all_finite() || !grads.w2.all_finite() || !finite(grads.b1) || !finite(grads.b2))
        throw std::runtime_error("adam_step: non-finite gradients (training diverged)");

    std::vector<Real> gw1 = grads.w1.data;
    if (weight_decay_w1 != 0.0)
        for (std::size_t i = 0; i < gw1.size(); ++i) gw1[i] += 2.0 * weight_decay_w1 * s.w1.data[i];

    ++s.step;
    detail::adam_update(s.w1.data, s.adam_m_w1.data, s.adam_v_w1.data, gw1, lr, s.step);
    detail::adam_update(s.w2.data, s.adam_m_w2.data, s.adam_v_w2.data, grads.w2.data, lr, s.step);
    detail::adam_update(s.b1, s.adam_m_b1, s.adam_v_b1, grads.b1, lr, s.step);
    detail::adam_update(s.b2, s.adam_m_b2, s.adam_v_b2, grads.b2, lr, s.step);
}

} // namespace ptlab
