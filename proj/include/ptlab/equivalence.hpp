#pragma once

#include <cmath>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "ptlab/dense.hpp"
#include "ptlab/graph.hpp"
#include "ptlab/losses.hpp"
#include "ptlab/mlp.hpp"
#include "ptlab/propagation.hpp"
#include "ptlab/sparse.hpp"

namespace ptlab {

/// Outcome of one numerical-identity check over randomized instances.
/// Verification is single-threaded, double-precision, dropout-free by
/// construction; reports are deterministic under a fixed seed.
struct VerificationReport {
    std::string check_name;
    Index instances = 0;
    Real max_abs_error = 0.0;
    Real max_rel_error = 0.0;
    Real tolerance = 0.0;
    bool passed = false;
    std::uint64_t seed = 0;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["check_name"] = check_name;
        j["instances"] = instances;
        j["max_abs_error"] = max_abs_error;
        j["max_rel_error"] = max_rel_error;
        j["tolerance"] = tolerance;
        j["passed"] = passed;
        j["seed"] = seed;
        return j;
    }
};

namespace verify_detail {

/// Symmetric Erdos-Renyi graph with p = 2 ln(n)/n, resampled until
/// connected, so every A_bar has strictly positive support where needed.
inline SparseMatrix random_connected_graph(Index n, Rng& rng) {
    const Real p = std::min(1.0, 2.0 * std::log(static_cast<Real>(std::max<Index>(n, 2))) / n);
    std::uniform_real_distribution<Real> u(0.0, 1.0);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::vector<std::tuple<Index, Index, Real>> trips;
        for (Index i = 0; i < n; ++i)
            for (Index j = i + 1; j < n; ++j)
                if (u(rng) < p) {
                    trips.emplace_back(i, j, 1.0);
                    trips.emplace_back(j, i, 1.0);
                }
        SparseMatrix adj = SparseMatrix::from_triplets(n, n, std::move(trips));
        // BFS connectivity
        std::vector<char> seen(n, 0);
        std::vector<Index> stack{0};
        seen[0] = 1;
        Index reached = 1;
        while (!stack.empty()) {
            const Index v = stack.back();
            stack.pop_back();
            for (Index k = adj.row_begin(v); k < adj.row_end(v); ++k) {
                const Index w = adj.col_indices[k];
                if (!seen[w]) {
                    seen[w] = 1;
                    ++reached;
                    stack.push_back(w);
                }
            }
        }
        if (reached == n) return adj;
    }
    throw std::runtime_error("random_connected_graph: no connected sample after 1000 attempts");
}

struct Instance {
    SparseMatrix a_hat;
    Matrix a_bar;  // dense, from the closed form
    PropagationConfig prop;
    LabelSet labels;
    Matrix features;
    PredictorState state;
    Index n = 0, classes = 0;
};

/// One randomized Lemma-1-style instance: connected graph, PPR config,
/// labels covering every class at least once, random feature matrix and
/// Glorot predictor. No dropout anywhere.
inline Instance random_instance(std::uint64_t seed, Index trial) {
    Rng rng(mix_seed(seed, 0xab10 + static_cast<std::uint64_t>(trial)));
    auto uni = [&rng](Index lo, Index hi) {
        return std::uniform_int_distribution<Index>(lo, hi)(rng);
    };
    Instance inst;
    inst.n = uni(5, 30);
    inst.classes = uni(2, 4);
    const Index feat = uni(3, 8);
    const Index hidden = uni(2, 8);

    SparseMatrix adj = random_connected_graph(inst.n, rng);
    inst.a_hat = normalize_adjacency(adj, NormalizationStrategy::sym_selfloop);
    inst.prop.alpha = std::uniform_real_distribution<Real>(0.05, 0.95)(rng);
    inst.prop.k_steps = uni(1, 8);
    inst.prop.clamp_labeled = false;
    inst.a_bar = closed_form_abar(inst.a_hat, inst.prop);

    // labeled subset with every class present
    const Index l_count = uni(inst.classes, std::min<Index>(inst.n, 3 * inst.classes));
    std::vector<Index> nodes(inst.n);
    for (Index i = 0; i < inst.n; ++i) nodes[i] = i;
    for (Index i = 0; i < l_count; ++i)
        std::swap(nodes[i], nodes[uni(i, inst.n - 1)]);
    inst.labels.onehot = Matrix(inst.n, inst.classes);
    inst.labels.label_of.assign(inst.n, -1);
    for (Index i = 0; i < l_count; ++i) {
        const Index v = nodes[i];
        const Index c = (i < inst.classes) ? i : uni(0, inst.classes - 1);
        inst.labels.labeled_nodes.push_back(v);
        inst.labels.label_of[v] = c;
        inst.labels.onehot(v, c) = 1.0;
    }
    std::sort(inst.labels.labeled_nodes.begin(), inst.labels.labeled_nodes.end());

    inst.features = Matrix(inst.n, feat);
    std::normal_distribution<Real> gauss(0.0, 1.0);
    for (Real& v : inst.features.data) v = gauss(rng);

    MLPConfig mcfg;
    mcfg.in_dim = feat;
    mcfg.hidden = hidden;
    mcfg.out_dim = inst.classes;
    mcfg.dropout = 0.0;
    mcfg.init_seed = mix_seed(seed, 0xc0de + static_cast<std::uint64_t>(trial));
    inst.state = init_params(mcfg);
    return inst;
}

inline Real rel_err(Real a, Real b) {
    const Real denom = std::max({std::abs(a), std::abs(b), Real(1e-8)});
    return std::abs(a - b) / denom;
}

inline void track(VerificationReport& rep, Real a, Real b) {
    rep.max_abs_error = std::max(rep.max_abs_error, std::abs(a - b));
    rep.max_rel_error = std::max(rep.max_rel_error, rel_err(a, b));
}

/// Gradients of the DGCN objective via the sparse adjoint path.
inline Gradients dgcn_gradients(const Instance& inst) {
    ForwardCache cache = forward(inst.state, inst.features, ForwardMode::eval);
    PropagationConfig prop = inst.prop;
    prop.clamp_labeled = false;
    Matrix y_hat = ppr_propagate(inst.a_hat, cache.probs, prop);
    Matrix grad_y(inst.n, inst.classes);
    for (Index j : inst.labels.labeled_nodes)
        grad_y(j, inst.labels.label(j)) = -1.0 / y_hat(j, inst.labels.label(j));
    // symmetric normalization: the adjoint runs against A_hat itself
    Matrix grad_f = ppr_propagate_adjoint(inst.a_hat, grad_y, prop);
    return backward_from_probs(inst.state, inst.features, cache, grad_f);
}

/// Gradients of the weighted-PT objective with the Lemma-1 weights held
/// constant, via the dense A_bar.
inline Gradients pt_gradients(const Instance& inst, Real* max_weight_norm_dev = nullptr) {
    ForwardCache cache = forward(inst.state, inst.features, ForwardMode::eval);
    PtWeights w = dgcn_pt_weights(inst.a_bar, cache.probs, inst.labels);
    if (max_weight_norm_dev) {
        for (Index c = 0; c < static_cast<Index>(w.labeled.size()); ++c) {
            Real s = 0.0;
            for (Index i = 0; i < w.w.rows; ++i) s += w.w(i, c);
            *max_weight_norm_dev = std::max(*max_weight_norm_dev, std::abs(s - 1.0));
        }
    }
    Matrix coeffs = pt_weights_to_coeffs(w, inst.labels, inst.classes);
    return backward_weighted_ce(inst.state, inst.features, cache, coeffs);
}

inline void track_gradients(VerificationReport& rep, const Gradients& a, const Gradients& b) {
    auto cmp_vec = [&rep](const std::vector<Real>& x, const std::vector<Real>& y) {
        for (std::size_t i = 0; i < x.size(); ++i) track(rep, x[i], y[i]);
    };
    cmp_vec(a.w1.data, b.w1.data);
    cmp_vec(a.w2.data, b.w2.data);
    cmp_vec(a.b1, b.b1);
    cmp_vec(a.b2, b.b2);
}

} // namespace verify_detail

/// Decoupled-GCN gradients equal weighted-PT gradients (dense-weight route),
/// elementwise, on random small instances. Pass criterion: relative error.
inline VerificationReport verify_lemma1(Index trials, std::uint64_t seed, Real tol = 1e-8) {
    VerificationReport rep{"lemma1_gradient_equivalence"};
    rep.instances = trials;
    rep.tolerance = tol;
    rep.seed = seed;
    for (Index t = 0; t < trials; ++t) {
        auto inst = verify_detail::random_instance(seed, t);
        Gradients a = verify_detail::dgcn_gradients(inst);
        Gradients b = verify_detail::pt_gradients(inst);
        verify_detail::track_gradients(rep, a, b);
    }
    rep.passed = rep.max_rel_error <= tol;
    return rep;
}

/// Per labeled source node, the Lemma-1 weights sum to exactly one.
/// Runs the same instances as verify_lemma1. Pass criterion: absolute error.
inline VerificationReport verify_weight_normalization(Index trials, std::uint64_t seed,
                                                      Real tol = 1e-12) {
    VerificationReport rep{"pt_weight_normalization"};
    rep.instances = trials;
    rep.tolerance = tol;
    rep.seed = seed;
    for (Index t = 0; t < trials; ++t) {
        auto inst = verify_detail::random_instance(seed, t);
        Real dev = 0.0;
        (void)verify_detail::pt_gradients(inst, &dev);
        rep.max_abs_error = std::max(rep.max_abs_error, dev);
        rep.max_rel_error = rep.max_abs_error;
    }
    rep.passed = rep.max_abs_error <= tol;
    return rep;
}

/// Iterated PPR of the identity equals the closed-form A_bar (infinity
/// norm). Pass criterion: absolute error.
inline VerificationReport verify_appnp_unroll(Index trials, std::uint64_t seed, Real tol = 1e-10) {
    VerificationReport rep{"appnp_unroll"};
    rep.instances = trials;
    rep.tolerance = tol;
    rep.seed = seed;
    for (Index t = 0; t < trials; ++t) {
        Rng rng(mix_seed(seed, 0x0a70 + static_cast<std::uint64_t>(t)));
        const Index n = std::uniform_int_distribution<Index>(5, 40)(rng);
        SparseMatrix adj = verify_detail::random_connected_graph(n, rng);
        SparseMatrix a_hat = normalize_adjacency(adj, NormalizationStrategy::sym_selfloop);
        PropagationConfig cfg;
        // exercise the edge cases in the first trials
        if (t == 0)
            cfg.alpha = 1.0;
        else
            cfg.alpha = std::uniform_real_distribution<Real>(0.02, 0.98)(rng);
        cfg.k_steps = (t == 1) ? 1 : std::uniform_int_distribution<Index>(0, 10)(rng);
        cfg.clamp_labeled = false;

        Matrix iterative = ppr_propagate(a_hat, Matrix::identity(n), cfg);
        Matrix closed = closed_form_abar(a_hat, cfg);
        for (std::size_t i = 0; i < iterative.data.size(); ++i)
            verify_detail::track(rep, iterative.data[i], closed.data[i]);
    }
    rep.passed = rep.max_abs_error <= tol;
    return rep;
}

/// Per labeled node, -log of the unnormalized propagated score decomposes
/// into cross entropy against the row-normalized prediction minus the log
/// of the row mass: l = CE(normalized) - log(sum_q abar_jq).
/// Pass criterion: absolute error.
inline VerificationReport verify_softmax_decomposition(Index trials, std::uint64_t seed,
                                                       Real tol = 1e-10) {
    VerificationReport rep{"softmax_decomposition"};
    rep.instances = trials;
    rep.tolerance = tol;
    rep.seed = seed;
    for (Index t = 0; t < trials; ++t) {
        auto inst = verify_detail::random_instance(seed, t);
        // include row-normalized bases, where the constant term is exactly 0
        if (t % 3 == 0) {
            Rng rng(mix_seed(seed, 0x50f7 + static_cast<std::uint64_t>(t)));
            SparseMatrix adj = verify_detail::random_connected_graph(inst.n, rng);
            inst.a_hat = normalize_adjacency(adj, NormalizationStrategy::row);
            inst.a_bar = closed_form_abar(inst.a_hat, inst.prop);
        }
        Matrix probs = forward(inst.state, inst.features, ForwardMode::eval).probs;
        Matrix y_hat = matmul(inst.a_bar, probs);
        for (Index j : inst.labels.labeled_nodes) {
            const Index h = inst.labels.label(j);
            Real mass = 0.0;
            for (Index q = 0; q < inst.n; ++q) mass += inst.a_bar(j, q);
            const Real lhs = -std::log(y_hat(j, h));
            const Real rhs = -std::log(y_hat(j, h) / mass) - std::log(mass);
            verify_detail::track(rep, lhs, rhs);
        }
    }
    rep.passed = rep.max_abs_error <= tol;
    return rep;
}

/// The matrix-wise weighted loss over Y_soft = A_bar Y equals the pairwise
/// double sum over (node, labeled source) with weights abar_ji f^gamma,
/// for gamma in {0, 1, ln 2}. Pass criterion: absolute error.
inline VerificationReport verify_matrix_loss(Index trials, std::uint64_t seed, Real tol = 1e-10) {
    VerificationReport rep{"matrix_pairwise_loss"};
    rep.instances = trials;
    rep.tolerance = tol;
    rep.seed = seed;
    const Real gammas[] = {0.0, 1.0, std::log(2.0)};
    for (Index t = 0; t < trials; ++t) {
        auto inst = verify_detail::random_instance(seed, t);
        if (t == 0) {  // empty label set: both sides vanish
            inst.labels.labeled_nodes.clear();
            std::fill(inst.labels.label_of.begin(), inst.labels.label_of.end(), Index(-1));
            inst.labels.onehot.fill(0.0);
        }
        Matrix probs = forward(inst.state, inst.features, ForwardMode::eval).probs;
        PropagationConfig lp = inst.prop;
        lp.clamp_labeled = false;  // the identity is about the plain A_bar Y
        Matrix y_soft = label_propagate(inst.a_hat, inst.labels, lp);
        for (Real gamma : gammas) {
            const Real matrix_form = pta_loss(y_soft, probs, gamma).loss;
            Real pairwise = 0.0;
            for (Index j : inst.labels.labeled_nodes) {
                const Index h = inst.labels.label(j);
                for (Index i = 0; i < inst.n; ++i)
                    pairwise += inst.a_bar(j, i) * std::pow(probs(i, h), gamma) *
                                (-std::log(probs(i, h)));
            }
            verify_detail::track(rep, matrix_form, pairwise);
        }
    }
    rep.passed = rep.max_abs_error <= tol;
    return rep;
}

} // namespace ptlab
