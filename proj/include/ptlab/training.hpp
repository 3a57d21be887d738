#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ptlab/dense.hpp"
#include "ptlab/graph.hpp"
#include "ptlab/losses.hpp"
#include "ptlab/mlp.hpp"
#include "ptlab/propagation.hpp"
#include "ptlab/sparse.hpp"

namespace ptlab {

enum class TrainMode {
    PTS,           // propagate labels once, static weights (gamma = 0)
    PTD,           // dynamic weights (gamma = 1)
    PTA,           // adaptive gamma = ln(1 + e/epsilon)
    PTA_FAST,      // PTA with plain-F early stopping instead of ensemble
    DGCN,          // decoupled GCN: propagate predictions every epoch
    DGCN_NOE,      // decoupled GCN trained as usual, inference skips propagation
    DGCN_UNIFORM,  // pseudo-labels weighted uniformly over each source's support
    MLP,           // labeled nodes only, no propagation anywhere
};

inline const char* to_string(TrainMode m) {
    switch (m) {
        case TrainMode::PTS: return "pts";
        case TrainMode::PTD: return "ptd";
        case TrainMode::PTA: return "pta";
        case TrainMode::PTA_FAST: return "pta-fast";
        case TrainMode::DGCN: return "dgcn";
        case TrainMode::DGCN_NOE: return "dgcn-noe";
        case TrainMode::DGCN_UNIFORM: return "dgcn-uniform";
        case TrainMode::MLP: return "mlp";
    }
    return "?";
}

inline TrainMode train_mode_from_string(const std::string& s) {
    if (s == "pts") return TrainMode::PTS;
    if (s == "ptd") return TrainMode::PTD;
    if (s == "pta") return TrainMode::PTA;
    if (s == "pta-fast") return TrainMode::PTA_FAST;
    if (s == "dgcn") return TrainMode::DGCN;
    if (s == "dgcn-noe") return TrainMode::DGCN_NOE;
    if (s == "dgcn-uniform") return TrainMode::DGCN_UNIFORM;
    if (s == "mlp") return TrainMode::MLP;
    throw std::invalid_argument("unknown training mode: " + s);
}

/// True for modes whose training target is a precomputed soft-label matrix
/// (everything except the per-epoch-propagating decoupled GCN).
inline bool is_pt_family(TrainMode m) {
    return m != TrainMode::DGCN && m != TrainMode::DGCN_NOE;
}

/// True for modes that ensemble K-hop predictions at inference.
inline bool uses_ensemble_inference(TrainMode m) {
    return m != TrainMode::MLP && m != TrainMode::DGCN_NOE;
}

struct TrainConfig {
    TrainMode mode = TrainMode::PTA;
    Real lambda1 = 0.05;   // data-loss weight (PT-family losses)
    Real lambda2 = 0.005;  // L2 weight on W1
    Real lr = 0.1;
    Real epsilon = 100.0;  // gamma temperature
    Index max_epochs = 1000;
    Index patience = 100;
    PropagationConfig prop;
    NormalizationStrategy normalization = NormalizationStrategy::sym_selfloop;
    std::uint64_t seed = 0;

    void check() const {
        if (!(epsilon > 0.0)) throw std::invalid_argument("TrainConfig: epsilon must be > 0");
        if (lambda1 < 0.0 || lambda2 < 0.0)
            throw std::invalid_argument("TrainConfig: lambda1/lambda2 must be >= 0");
        if (max_epochs < 1) throw std::invalid_argument("TrainConfig: max_epochs must be >= 1");
        if (patience < 1 || patience > max_epochs)
            throw std::invalid_argument("TrainConfig: need 1 <= patience <= max_epochs");
        prop.check();
    }
};

struct EpochRecord {
    Real train_loss = 0.0;
    Real early_stop_accuracy = 0.0;
};

struct TrainedModel {
    PredictorState predictor;
    std::vector<EpochRecord> history;
    Index best_epoch = 0;
    Real wall_time_total_s = 0.0;    // everything incl. preprocessing and evals
    Real wall_time_per_epoch_s = 0.0;  // median train-step time after 5-epoch warmup
    Real prep_time_s = 0.0;          // label-propagation / target preprocessing
};

/// Thrown when a training run produces non-finite loss or gradients.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline Real accuracy_on(const std::vector<Index>& nodes, const std::vector<Index>& predicted,
                        const std::vector<Index>& truth) {
    if (nodes.empty()) return 0.0;
    Index hits = 0;
    for (Index v : nodes)
        if (predicted[v] == truth[v]) ++hits;
    return static_cast<Real>(hits) / static_cast<Real>(nodes.size());
}

namespace detail {

inline std::vector<Index> argmax_classes(const Matrix& scores) {
    std::vector<Index> cls(scores.rows);
    for (Index i = 0; i < scores.rows; ++i) cls[i] = argmax_row(scores, i);
    return cls;
}

/// Per-class prediction from an eval-mode forward, optionally ensembled
/// through K PPR steps.
inline std::vector<Index> predict_classes(const PredictorState& s, const Matrix& x,
                                          const SparseMatrix& a_hat, PropagationConfig prop,
                                          bool ensemble) {
    Matrix probs = forward(s, x, ForwardMode::eval).probs;
    if (!ensemble) return argmax_classes(probs);
    prop.clamp_labeled = false;
    Matrix scores = ppr_propagate(a_hat, probs, prop);
    return argmax_classes(scores);
}

inline Real l2_squared(const Matrix& m) {
    Real s = 0.0;
    for (Real v : m.data) s += v * v;
    return s;
}

inline Real median_of(std::vector<Real> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return (v.size() % 2 == 1) ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

} // namespace detail

/// Training target for the uniform-weighting ablation: every labeled node j
/// spreads weight 1/|supp| uniformly over the support of its A_bar row,
/// i.e. the nodes reachable by any walk of length <= K (exact boolean
/// closure, so it is correct with or without self-loops).
inline Matrix uniform_support_targets(const SparseMatrix& a_hat, const LabelSet& labels,
                                      const PropagationConfig& cfg) {
    cfg.check();
    const Index n = a_hat.n_rows;
    Matrix targets(n, labels.onehot.cols);
    std::vector<char> in_support(n);
    std::vector<Index> frontier, next, support;
    for (Index j : labels.labeled_nodes) {
        std::fill(in_support.begin(), in_support.end(), 0);
        support.clear();
        in_support[j] = 1;
        support.push_back(j);
        if (cfg.alpha < 1.0) {  // alpha = 1 kills every k >= 1 coefficient
            frontier.assign(1, j);
            for (Index step = 0; step < cfg.k_steps && !frontier.empty(); ++step) {
                next.clear();
                for (Index u : frontier)
                    for (Index k = a_hat.row_begin(u); k < a_hat.row_end(u); ++k) {
                        const Index v = a_hat.col_indices[k];
                        if (!in_support[v]) {
                            in_support[v] = 1;
                            next.push_back(v);
                            support.push_back(v);
                        }
                    }
                frontier.swap(next);
            }
        }
        const Real w = 1.0 / static_cast<Real>(support.size());
        const Index h = labels.label(j);
        for (Index v : support) targets(v, h) += w;
    }
    return targets;
}

/// Ensemble inference: propagate eval-mode predictions through K PPR steps
/// and take the per-row argmax (ties to the lowest class index).
inline std::vector<Index> ensemble_predict(const PredictorState& model, const Dataset& ds,
                                           PropagationConfig prop,
                                           NormalizationStrategy normalization =
                                               NormalizationStrategy::sym_selfloop) {
    SparseMatrix a_hat = normalize_adjacency(ds.adjacency, normalization);
    return detail::predict_classes(model, ds.features, a_hat, prop, true);
}

/// Full-batch training for every mode. Precomputes the soft-label target for
/// the PT family; the decoupled-GCN modes propagate predictions each epoch
/// and backpropagate through the propagation via the adjoint recurrence.
inline TrainedModel train(const Dataset& ds, const Split& split, const MLPConfig& mlp_cfg_in,
                          const TrainConfig& cfg) {
    using clock = std::chrono::steady_clock;
    const auto t_start = clock::now();
    auto seconds_since = [](clock::time_point t0) {
        return std::chrono::duration<Real>(clock::now() - t0).count();
    };

    cfg.check();
    MLPConfig mlp_cfg = mlp_cfg_in;
    mlp_cfg.in_dim = ds.f;
    mlp_cfg.out_dim = ds.num_classes;
    mlp_cfg.check();

    const SparseMatrix a_hat = normalize_adjacency(ds.adjacency, cfg.normalization);
    const LabelSet train_labels = labelset_from_split(ds, split);
    const bool dgcn_like = !is_pt_family(cfg.mode);

    // targets / preprocessing
    const auto t_prep = clock::now();
    Matrix targets;
    SparseMatrix a_hat_t;
    if (cfg.mode == TrainMode::MLP) {
        targets = train_labels.onehot;
    } else if (cfg.mode == TrainMode::DGCN_UNIFORM) {
        targets = uniform_support_targets(a_hat, train_labels, cfg.prop);
    } else if (!dgcn_like) {
        targets = label_propagate(a_hat, train_labels, cfg.prop);
    } else {
        a_hat_t = a_hat.transpose();
    }
    const Real prep_s = seconds_since(t_prep);

    PredictorState state = init_params(mlp_cfg);

    TrainedModel out;
    out.prep_time_s = prep_s;
    PredictorState best_state = state;
    Real best_acc = -1.0;
    Real best_loss = std::numeric_limits<Real>::infinity();
    Index best_epoch = -1;

    PropagationConfig infer_prop = cfg.prop;
    infer_prop.clamp_labeled = false;

    std::vector<Real> step_times;
    step_times.reserve(cfg.max_epochs);

    for (Index epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const auto t_step = clock::now();

        ForwardCache cache = forward(state, ds.features, ForwardMode::train,
                                     mix_seed(cfg.seed, 0xd70000 + static_cast<std::uint64_t>(epoch)));
        if (!cache.probs.all_finite())
            throw DivergenceError("training diverged: non-finite predictions at epoch " +
                                  std::to_string(epoch) + " (mode " + to_string(cfg.mode) + ")");
        Real data_loss;
        Gradients grads;
        if (!dgcn_like) {
            Real gamma = 0.0;
            if (cfg.mode == TrainMode::PTD) gamma = 1.0;
            if (cfg.mode == TrainMode::PTA || cfg.mode == TrainMode::PTA_FAST)
                gamma = compute_gamma(epoch, cfg.epsilon);
            WeightedLoss wl = pta_loss(targets, cache.probs, gamma);
            data_loss = cfg.lambda1 * wl.loss;
            if (cfg.lambda1 != 1.0)
                for (Real& v : wl.coeffs.data) v *= cfg.lambda1;
            grads = backward_weighted_ce(state, ds.features, cache, wl.coeffs);
        } else {
            PropagationConfig prop = cfg.prop;
            prop.clamp_labeled = false;
            Matrix y_hat = ppr_propagate(a_hat, cache.probs, prop);
            data_loss = 0.0;
            Matrix grad_y(ds.n, ds.num_classes);
            for (Index j : train_labels.labeled_nodes) {
                const Real v = y_hat(j, train_labels.label(j));
                if (!(v > 0.0) || !std::isfinite(v))
                    throw DivergenceError("dgcn training: invalid propagated score at epoch " +
                                          std::to_string(epoch));
                data_loss -= std::log(v);
                grad_y(j, train_labels.label(j)) = -1.0 / v;
            }
            Matrix grad_f = ppr_propagate_adjoint(a_hat_t, grad_y, prop);
            grads = backward_from_probs(state, ds.features, cache, grad_f);
        }

        const Real total_loss = data_loss + cfg.lambda2 * detail::l2_squared(state.w1);
        if (!std::isfinite(total_loss))
            throw DivergenceError("training diverged: non-finite loss at epoch " +
                                  std::to_string(epoch) + " (mode " + to_string(cfg.mode) + ")");
        try {
            adam_step(state, grads, cfg.lr, cfg.lambda2);
        } catch (const std::runtime_error& e) {
            throw DivergenceError(std::string(e.what()) + " at epoch " + std::to_string(epoch));
        }
        step_times.push_back(seconds_since(t_step));

        // early-stopping metric (not part of the per-epoch step time)
        const bool es_ensemble = uses_ensemble_inference(cfg.mode) && cfg.mode != TrainMode::PTA_FAST;
        std::vector<Index> pred =
            detail::predict_classes(state, ds.features, a_hat, infer_prop, es_ensemble);
        const Real es_acc = accuracy_on(split.early_stop, pred, ds.labels);
        out.history.push_back({total_loss, es_acc});

        if (es_acc > best_acc || (es_acc == best_acc && total_loss < best_loss)) {
            best_acc = es_acc;
            best_loss = total_loss;
            best_epoch = epoch;
            best_state = state;
        }
        if (epoch - best_epoch >= cfg.patience) break;
    }

    // warmup epochs excluded from the per-epoch estimate where possible
    std::vector<Real> timed(step_times.begin() + (step_times.size() > 5 ? 5 : 0), step_times.end());
    out.wall_time_per_epoch_s = detail::median_of(std::move(timed));
    out.best_epoch = best_epoch;
    out.predictor = std::move(best_state);
    out.wall_time_total_s = seconds_since(t_start);
    return out;
}

/// Test-set accuracy under the mode's inference rule.
inline Real evaluate_test_accuracy(const TrainedModel& model, const Dataset& ds, const Split& split,
                                   const TrainConfig& cfg) {
    SparseMatrix a_hat = normalize_adjacency(ds.adjacency, cfg.normalization);
    PropagationConfig prop = cfg.prop;
    prop.clamp_labeled = false;
    std::vector<Index> pred = detail::predict_classes(model.predictor, ds.features, a_hat, prop,
                                                      uses_ensemble_inference(cfg.mode));
    return accuracy_on(split.test, pred, ds.labels);
}

/// Early-stop-set accuracy of the restored-best model (the metric recorded
/// at best_epoch).
inline Real best_early_stop_accuracy(const TrainedModel& model) {
    return model.history.empty() ? 0.0 : model.history[model.best_epoch].early_stop_accuracy;
}

} // namespace ptlab
