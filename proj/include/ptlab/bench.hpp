#pragma once

#include <atomic>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ptlab/equivalence.hpp"
#include "ptlab/graph.hpp"
#include "ptlab/noise.hpp"
#include "ptlab/stats.hpp"
#include "ptlab/training.hpp"

namespace ptlab {

/// One training run's record. per_epoch_ms measures the training step alone
/// (median after warmup); total_s covers everything including preprocessing
/// and per-epoch early-stop evaluation, with the preprocessing share also
/// broken out as prep_s.
struct RunResult {
    std::string mode;
    std::string dataset;
    std::uint64_t seed = 0;        // predictor init seed
    std::uint64_t split_seed = 0;
    Real test_accuracy = 0.0;
    Real early_stop_accuracy = 0.0;
    Index epochs = 0;
    Real per_epoch_ms = 0.0;
    Real total_s = 0.0;
    Real prep_s = 0.0;
    bool diverged = false;
    std::string error;
    std::optional<Real> noise_rate;  // set by noise sweeps

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["mode"] = mode;
        j["dataset"] = dataset;
        j["seed"] = seed;
        j["split_seed"] = split_seed;
        if (noise_rate) j["noise_rate"] = *noise_rate;
        j["test_accuracy"] = test_accuracy;
        j["early_stop_accuracy"] = early_stop_accuracy;
        j["epochs"] = epochs;
        j["diverged"] = diverged;
        if (!error.empty()) j["error"] = error;
        j["per_epoch_ms"] = per_epoch_ms;
        j["total_s"] = total_s;
        j["prep_s"] = prep_s;
        return j;
    }
};

struct AggregateResult {
    std::string mode;
    Real mean_accuracy = 0.0;
    Real ci95_low = 0.0;
    Real ci95_high = 0.0;
    Index n_runs = 0;       // runs included (diverged runs excluded)
    Index n_diverged = 0;
    Index bootstrap_resamples = 0;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["mode"] = mode;
        j["mean_accuracy"] = mean_accuracy;
        j["ci95_low"] = ci95_low;
        j["ci95_high"] = ci95_high;
        j["n_runs"] = n_runs;
        j["n_diverged"] = n_diverged;
        j["bootstrap_resamples"] = bootstrap_resamples;
        return j;
    }
};

struct BenchOptions {
    Index n_runs = 20;
    std::uint64_t base_seed = 0;
    Index bootstrap_resamples = 1000;
    Index per_class = 20;
    Index early_stop_size = 500;
    Index workers = 1;  // runs execute serially within a worker
    std::optional<Real> dropout_override;
};

/// APPNP-style baselines keep their original dropout; the PT family and the
/// plain MLP train without it.
inline Real default_dropout(TrainMode mode) {
    switch (mode) {
        case TrainMode::DGCN:
        case TrainMode::DGCN_NOE:
        case TrainMode::DGCN_UNIFORM: return 0.5;
        default: return 0.0;
    }
}

/// One (mode, split seed, init seed) training run; divergence is captured
/// in the record rather than propagated.
inline RunResult run_single(const Dataset& ds, const std::string& dataset_name, TrainMode mode,
                            std::uint64_t split_seed, std::uint64_t init_seed,
                            const TrainConfig& cfg_in, const MLPConfig& mlp_in,
                            Index per_class, Index early_stop_size,
                            std::optional<NoiseSpec> label_noise = std::nullopt) {
    RunResult rr;
    rr.mode = to_string(mode);
    rr.dataset = dataset_name;
    rr.seed = init_seed;
    rr.split_seed = split_seed;

    TrainConfig cfg = cfg_in;
    cfg.mode = mode;
    cfg.seed = init_seed;
    MLPConfig mlp = mlp_in;
    mlp.init_seed = init_seed;

    try {
        Split split = make_split(ds, per_class, early_stop_size, split_seed);
        Dataset noisy_labels_view;  // only used for label-noise runs
        const Dataset* active = &ds;
        if (label_noise) {
            // corrupt the training labels only: rebuild a dataset whose
            // ground truth is intact but whose split-visible labels flip
            noisy_labels_view = ds;
            LabelSet clean = labelset_from_split(ds, split);
            LabelSet dirty = inject_label_noise(clean, ds, *label_noise);
            for (Index v : split.train) noisy_labels_view.labels[v] = dirty.label_of[v];
            active = &noisy_labels_view;
        }
        TrainedModel model = train(*active, split, mlp, cfg);
        // evaluation always scores against the clean ground truth
        rr.test_accuracy = evaluate_test_accuracy(model, ds, split, cfg);
        {
            SparseMatrix a_hat = normalize_adjacency(ds.adjacency, cfg.normalization);
            PropagationConfig prop = cfg.prop;
            prop.clamp_labeled = false;
            const bool es_ens = uses_ensemble_inference(mode) && mode != TrainMode::PTA_FAST;
            auto pred = detail::predict_classes(model.predictor, ds.features, a_hat, prop, es_ens);
            rr.early_stop_accuracy = accuracy_on(split.early_stop, pred, ds.labels);
        }
        rr.epochs = static_cast<Index>(model.history.size());
        rr.per_epoch_ms = model.wall_time_per_epoch_s * 1000.0;
        rr.total_s = model.wall_time_total_s;
        rr.prep_s = model.prep_time_s;
    } catch (const DivergenceError& e) {
        rr.diverged = true;
        rr.error = e.what();
    }
    return rr;
}

struct BenchmarkOutput {
    std::vector<RunResult> runs;  // ordered by (run index, mode index)
    std::vector<AggregateResult> aggregates;
    std::map<std::string, TTestResult> pairwise_tests;  // "a_vs_b" -> test

    nlohmann::ordered_json summary_json() const {
        nlohmann::ordered_json j;
        j["aggregates"] = nlohmann::ordered_json::array();
        for (const auto& a : aggregates) j["aggregates"].push_back(a.to_json());
        j["paired_t_tests"] = nlohmann::ordered_json::object();
        for (const auto& [k, t] : pairwise_tests) {
            nlohmann::ordered_json tj;
            tj["p_value"] = t.p_value;
            tj["t_stat"] = std::isfinite(t.t_stat) ? t.t_stat : 0.0;
            tj["dof"] = t.dof;
            tj["degenerate"] = t.degenerate;
            j["paired_t_tests"][k] = tj;
        }
        return j;
    }
};

/// Run every mode over n_runs (split seed and init seed vary jointly:
/// base_seed + r), aggregate with a percentile bootstrap, and pair up
/// accuracies for t-tests. Tasks may run on several workers; each run is
/// single-threaded and lands in a preassigned slot, so output is identical
/// whatever the worker count.
inline BenchmarkOutput run_benchmark(const Dataset& ds, const std::string& dataset_name,
                                     const std::vector<TrainMode>& modes, const TrainConfig& cfg,
                                     const MLPConfig& mlp, const BenchOptions& opt,
                                     std::optional<NoiseSpec> label_noise = std::nullopt) {
    BenchmarkOutput out;
    const Index m_count = static_cast<Index>(modes.size());
    out.runs.resize(static_cast<std::size_t>(opt.n_runs) * m_count);

    auto task = [&](Index idx) {
        const Index r = idx / m_count;
        const Index m = idx % m_count;
        MLPConfig run_mlp = mlp;
        run_mlp.dropout = opt.dropout_override.value_or(default_dropout(modes[m]));
        std::optional<NoiseSpec> ln = label_noise;
        if (ln) ln->seed = mix_seed(ln->seed, opt.base_seed + r);
        out.runs[idx] = run_single(ds, dataset_name, modes[m], opt.base_seed + r, opt.base_seed + r,
                                   cfg, run_mlp, opt.per_class, opt.early_stop_size, ln);
    };

    const Index total = opt.n_runs * m_count;
    if (opt.workers <= 1) {
        for (Index i = 0; i < total; ++i) task(i);
    } else {
        std::atomic<Index> next{0};
        std::vector<std::thread> pool;
        const Index w_count = std::min<Index>(opt.workers, total);
        pool.reserve(w_count);
        for (Index w = 0; w < w_count; ++w)
            pool.emplace_back([&] {
                for (Index i = next.fetch_add(1); i < total; i = next.fetch_add(1)) task(i);
            });
        for (auto& th : pool) th.join();
    }

    for (Index m = 0; m < m_count; ++m) {
        AggregateResult agg;
        agg.mode = to_string(modes[m]);
        agg.bootstrap_resamples = opt.bootstrap_resamples;
        std::vector<Real> accs;
        for (Index r = 0; r < opt.n_runs; ++r) {
            const RunResult& rr = out.runs[static_cast<std::size_t>(r) * m_count + m];
            if (rr.diverged)
                ++agg.n_diverged;
            else
                accs.push_back(rr.test_accuracy);
        }
        agg.n_runs = static_cast<Index>(accs.size());
        if (!accs.empty()) {
            agg.mean_accuracy = mean_of(accs);
            auto ci = bootstrap_ci(accs, opt.bootstrap_resamples, mix_seed(opt.base_seed, m));
            agg.ci95_low = ci.first;
            agg.ci95_high = ci.second;
        }
        out.aggregates.push_back(agg);
    }

    // pairwise t-tests over runs where both modes converged
    for (Index a = 0; a < m_count; ++a)
        for (Index b = a + 1; b < m_count; ++b) {
            std::vector<Real> xs, ys;
            for (Index r = 0; r < opt.n_runs; ++r) {
                const RunResult& ra = out.runs[static_cast<std::size_t>(r) * m_count + a];
                const RunResult& rb = out.runs[static_cast<std::size_t>(r) * m_count + b];
                if (!ra.diverged && !rb.diverged) {
                    xs.push_back(ra.test_accuracy);
                    ys.push_back(rb.test_accuracy);
                }
            }
            if (xs.size() >= 2) {
                const std::string key =
                    std::string(to_string(modes[a])) + "_vs_" + to_string(modes[b]);
                out.pairwise_tests[key] = paired_t_test(xs, ys);
            }
        }
    return out;
}

struct NoiseSweepOutput {
    std::vector<Real> rates;
    std::vector<BenchmarkOutput> per_rate;  // parallel to rates
};

/// For each rate, corrupt then benchmark. Structure sweeps run all graph
/// modes with K = 2 propagation; label sweeps corrupt each run's training
/// labels after the split.
inline NoiseSweepOutput run_noise_sweep(const Dataset& ds, const std::string& dataset_name,
                                        NoiseKind kind, const std::vector<Real>& rates,
                                        const std::vector<TrainMode>& modes, const TrainConfig& cfg,
                                        const MLPConfig& mlp, const BenchOptions& opt,
                                        std::uint64_t noise_seed = 0) {
    for (std::size_t i = 1; i < rates.size(); ++i)
        if (rates[i] < rates[i - 1])
            throw std::invalid_argument("run_noise_sweep: rates must be sorted ascending");

    NoiseSweepOutput out;
    out.rates = rates;
    for (std::size_t i = 0; i < rates.size(); ++i) {
        if (kind == NoiseKind::structure) {
            NoiseSpec spec{NoiseKind::structure, rates[i], mix_seed(noise_seed, i)};
            Dataset corrupted = inject_structure_noise(ds, spec);
            TrainConfig sweep_cfg = cfg;
            sweep_cfg.prop.k_steps = 2;  // 2-layer propagation for the structure comparison
            auto bench = run_benchmark(corrupted, dataset_name, modes, sweep_cfg, mlp, opt);
            for (auto& rr : bench.runs) rr.noise_rate = rates[i];
            out.per_rate.push_back(std::move(bench));
        } else {
            NoiseSpec spec{NoiseKind::label, rates[i], mix_seed(noise_seed, i)};
            auto bench = run_benchmark(ds, dataset_name, modes, cfg, mlp, opt, spec);
            for (auto& rr : bench.runs) rr.noise_rate = rates[i];
            out.per_rate.push_back(std::move(bench));
        }
    }
    return out;
}

/// The four paper-identity checks at their standing tolerances.
inline std::vector<VerificationReport> run_verifications(std::uint64_t seed, Index trials = 50,
                                                         std::optional<Real> tol_override =
                                                             std::nullopt) {
    auto tol = [&](Real dflt) { return tol_override.value_or(dflt); };
    std::vector<VerificationReport> reports;
    reports.push_back(verify_lemma1(trials, seed, tol(1e-8)));
    reports.push_back(verify_appnp_unroll(trials, seed, tol(1e-10)));
    reports.push_back(verify_softmax_decomposition(trials, seed, tol(1e-10)));
    reports.push_back(verify_matrix_loss(trials, seed, tol(1e-10)));
    return reports;
}

} // namespace ptlab
