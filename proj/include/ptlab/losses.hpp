#pragma once

#include <cfloat>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ptlab/dense.hpp"
#include "ptlab/graph.hpp"
#include "ptlab/propagation.hpp"

namespace ptlab {

/// Adaptive weighting exponent: gamma = ln(1 + epoch/epsilon).
/// gamma(0) = 0 and it grows without bound as training proceeds.
inline Real compute_gamma(Index epoch, Real epsilon) {
    if (epoch < 0) throw std::invalid_argument("compute_gamma: negative epoch");
    if (!(epsilon > 0.0)) throw std::invalid_argument("compute_gamma: epsilon must be > 0");
    return std::log1p(static_cast<Real>(epoch) / epsilon);
}

struct WeightedLoss {
    Real loss = 0.0;
    Matrix coeffs;  // the detached weights c_{ik}; feed to backward_weighted_ce
};

/// L = -sum_{i,k} y_soft[i,k] * F[i,k]^gamma * log F[i,k].
/// The returned coefficient matrix c = y_soft (.) F^gamma carries no gradient;
/// gradients flow only through log F. The log is floored at the smallest
/// positive normal so fully saturated probabilities cannot produce -inf.
inline WeightedLoss pta_loss(const Matrix& y_soft, const Matrix& probs, Real gamma) {
    if (!y_soft.same_shape(probs)) throw std::invalid_argument("pta_loss: shape mismatch");
    WeightedLoss out;
    out.coeffs = Matrix(probs.rows, probs.cols);
    Real loss = 0.0;
    for (std::size_t i = 0; i < probs.data.size(); ++i) {
        const Real y = y_soft.data[i];
        if (y == 0.0) continue;
        const Real f = probs.data[i];
        if (!std::isfinite(y) || !std::isfinite(f))
            throw std::invalid_argument("pta_loss: non-finite entry");
        Real c;
        if (gamma == 0.0)
            c = y;
        else if (gamma == 1.0)
            c = y * f;
        else
            c = y * std::pow(f, gamma);
        out.coeffs.data[i] = c;
        loss -= c * std::log(std::max(f, DBL_MIN));
    }
    out.loss = loss;
    return out;
}

struct DgcnLoss {
    Real loss = 0.0;
    Matrix y_hat_labeled;        // |V_l| x C, the propagated prediction rows
    std::vector<Index> labeled;  // row order of y_hat_labeled
};

/// Decoupled-GCN objective: propagate F with PPR (no clamping) and take
/// cross entropy of the log of the propagated scores on labeled rows. The
/// propagated rows need not be normalized; the objective only shifts by a
/// constant (see the verification suite).
inline DgcnLoss dgcn_loss(const SparseMatrix& a_hat, const Matrix& probs, const LabelSet& labels,
                          PropagationConfig prop) {
    prop.clamp_labeled = false;
    Matrix y_hat = ppr_propagate(a_hat, probs, prop);
    DgcnLoss out;
    out.labeled = labels.labeled_nodes;
    out.y_hat_labeled = Matrix(static_cast<Index>(out.labeled.size()), probs.cols);
    Real loss = 0.0;
    for (std::size_t r = 0; r < out.labeled.size(); ++r) {
        const Index j = out.labeled[r];
        for (Index c = 0; c < probs.cols; ++c) out.y_hat_labeled(static_cast<Index>(r), c) = y_hat(j, c);
        const Real v = y_hat(j, labels.label(j));
        if (!(v > 0.0))
            throw std::runtime_error("dgcn_loss: nonpositive propagated score at labeled node " +
                                     std::to_string(j));
        loss -= std::log(v);
    }
    out.loss = loss;
    return out;
}

struct PtWeights {
    std::vector<Index> labeled;  // columns of w
    Matrix w;                    // n x |V_l|; column j sums to 1
};

/// The pseudo-label weights that make weighted PT match decoupled-GCN
/// training: w_ij = abar_ji * F[i,h(j)] / sum_q abar_jq * F[q,h(j)].
/// Verification-scale only (dense A_bar).
inline PtWeights dgcn_pt_weights(const Matrix& a_bar, const Matrix& probs, const LabelSet& labels) {
    if (a_bar.rows != a_bar.cols || a_bar.rows != probs.rows)
        throw std::invalid_argument("dgcn_pt_weights: shape mismatch");
    PtWeights out;
    out.labeled = labels.labeled_nodes;
    const Index n = probs.rows;
    const Index l_count = static_cast<Index>(out.labeled.size());
    out.w = Matrix(n, l_count);
    for (Index c = 0; c < l_count; ++c) {
        const Index j = out.labeled[c];
        const Index h = labels.label(j);
        Real denom = 0.0;
        for (Index q = 0; q < n; ++q) denom += a_bar(j, q) * probs(q, h);
        if (denom == 0.0)
            throw std::runtime_error("dgcn_pt_weights: zero denominator at labeled node " +
                                     std::to_string(j));
        for (Index i = 0; i < n; ++i) out.w(i, c) = a_bar(j, i) * probs(i, h) / denom;
    }
    return out;
}

/// Collapse PT weights to per-(node, class) coefficients:
/// c[i,k] = sum_{j in V_l, h(j)=k} w_ij. Feeding these to
/// backward_weighted_ce gives the gradient of sum_ij w_ij CE(f_i, y_j).
inline Matrix pt_weights_to_coeffs(const PtWeights& w, const LabelSet& labels, Index num_classes) {
    Matrix c(w.w.rows, num_classes);
    for (Index col = 0; col < static_cast<Index>(w.labeled.size()); ++col) {
        const Index k = labels.label(w.labeled[col]);
        for (Index i = 0; i < w.w.rows; ++i) c(i, k) += w.w(i, col);
    }
    return c;
}

} // namespace ptlab
