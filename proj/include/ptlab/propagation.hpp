#pragma once

#include <stdexcept>
#include <vector>

#include "ptlab/dense.hpp"
#include "ptlab/graph.hpp"
#include "ptlab/sparse.hpp"

namespace ptlab {

/// Personalized-PageRank propagation settings. The K-step recurrence
///   H^(k) = (1-alpha) * A_hat * H^(k-1) + alpha * H^(0)
/// is equivalent to multiplying by A_bar = sum_k beta_k A_hat^k with
///   beta_k = alpha (1-alpha)^k   for k < K,   beta_K = (1-alpha)^K,
/// and the beta_k sum to 1 for every alpha, K.
struct PropagationConfig {
    Real alpha = 0.1;
    Index k_steps = 10;
    bool clamp_labeled = true;  // label propagation resets labeled rows each step

    void check() const {
        if (!(alpha > 0.0 && alpha <= 1.0))
            throw std::invalid_argument("PropagationConfig: alpha must be in (0,1]");
        if (k_steps < 0) throw std::invalid_argument("PropagationConfig: K must be >= 0");
    }

    /// The implied beta_k, k = 0..K.
    std::vector<Real> implied_coefficients() const {
        check();
        std::vector<Real> beta(static_cast<std::size_t>(k_steps) + 1);
        Real pow = 1.0;  // (1-alpha)^k
        for (Index k = 0; k < k_steps; ++k) {
            beta[k] = alpha * pow;
            pow *= (1.0 - alpha);
        }
        beta[k_steps] = pow;
        return beta;
    }
};

/// H^(K) of the PPR recurrence with H^(0) = h0. K=0 returns h0 unchanged.
/// Signal propagation never clamps; pass a config with clamp_labeled=false.
inline Matrix ppr_propagate(const SparseMatrix& a_hat, const Matrix& h0, const PropagationConfig& cfg) {
    cfg.check();
    if (cfg.clamp_labeled)
        throw std::invalid_argument("ppr_propagate: clamping is a label-propagation concern");
    if (a_hat.n_rows != a_hat.n_cols) throw std::invalid_argument("ppr_propagate: matrix not square");
    if (a_hat.n_cols != h0.rows) throw std::invalid_argument("ppr_propagate: dimension mismatch");

    Matrix h = h0;
    for (Index step = 0; step < cfg.k_steps; ++step) {
        Matrix ah = spmm(a_hat, h);
        h = lincomb(1.0 - cfg.alpha, ah, cfg.alpha, h0);
    }
    return h;
}

/// Reverse-mode adjoint of ppr_propagate: given dL/dH^(K), returns dL/dH^(0).
/// Runs the K steps backwards against A_hat^T (callers pass the transpose,
/// which equals A_hat itself for the symmetric normalizations).
inline Matrix ppr_propagate_adjoint(const SparseMatrix& a_hat_t, const Matrix& grad_out,
                                    const PropagationConfig& cfg) {
    cfg.check();
    if (a_hat_t.n_cols != grad_out.rows)
        throw std::invalid_argument("ppr_propagate_adjoint: dimension mismatch");
    Matrix g = grad_out;
    Matrix g_h0(grad_out.rows, grad_out.cols);
    for (Index step = 0; step < cfg.k_steps; ++step) {
        for (std::size_t i = 0; i < g.data.size(); ++i) g_h0.data[i] += cfg.alpha * g.data[i];
        Matrix atg = spmm(a_hat_t, g);
        for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = (1.0 - cfg.alpha) * atg.data[i];
    }
    for (std::size_t i = 0; i < g.data.size(); ++i) g_h0.data[i] += g.data[i];
    return g_h0;
}

/// Soft labels Y_soft from K PPR steps on the one-hot matrix. When
/// cfg.clamp_labeled, labeled rows are reset to their one-hot values after
/// every iteration, so they survive in the output exactly.
inline Matrix label_propagate(const SparseMatrix& a_hat, const LabelSet& labels,
                              const PropagationConfig& cfg) {
    cfg.check();
    if (a_hat.n_rows != a_hat.n_cols) throw std::invalid_argument("label_propagate: matrix not square");
    if (a_hat.n_cols != labels.onehot.rows)
        throw std::invalid_argument("label_propagate: dimension mismatch");

    const Matrix& y0 = labels.onehot;
    Matrix y = y0;
    const Index c_count = y0.cols;
    for (Index step = 0; step < cfg.k_steps; ++step) {
        Matrix ay = spmm(a_hat, y);
        y = lincomb(1.0 - cfg.alpha, ay, cfg.alpha, y0);
        if (cfg.clamp_labeled) {
            for (Index v : labels.labeled_nodes)
                for (Index c = 0; c < c_count; ++c) y(v, c) = y0(v, c);
        }
    }
    return y;
}

/// Dense A_bar by explicit matrix powers; verification-scale only.
inline Matrix closed_form_abar(const SparseMatrix& a_hat, const PropagationConfig& cfg,
                               Index max_n = 2048) {
    cfg.check();
    if (a_hat.n_rows != a_hat.n_cols)
        throw std::invalid_argument("closed_form_abar: matrix not square");
    if (a_hat.n_rows > max_n)
        throw std::invalid_argument("closed_form_abar: n=" + std::to_string(a_hat.n_rows) +
                                    " exceeds verification guard max_n=" + std::to_string(max_n));
    const Index n = a_hat.n_rows;
    const Matrix a_dense = a_hat.to_dense();
    const std::vector<Real> beta = cfg.implied_coefficients();

    Matrix abar(n, n);
    Matrix power = Matrix::identity(n);  // A_hat^k
    for (Index k = 0; k <= cfg.k_steps; ++k) {
        if (k > 0) power = matmul(power, a_dense);
        if (beta[k] == 0.0) continue;
        for (std::size_t i = 0; i < abar.data.size(); ++i)
            abar.data[i] += beta[k] * power.data[i];
    }
    return abar;
}

} // namespace ptlab
