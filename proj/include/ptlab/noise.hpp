#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ptlab/common.hpp"
#include "ptlab/graph.hpp"
#include "ptlab/sparse.hpp"

namespace ptlab {

enum class NoiseKind { structure, label };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::structure;
    Real target_rate = 0.0;  // fraction in [0,1]
    std::uint64_t seed = 0;

    void check() const {
        if (!(target_rate >= 0.0 && target_rate <= 1.0))
            throw std::invalid_argument("NoiseSpec: rate must be in [0,1]");
    }
};

/// Stochastic-block-model stand-in for the benchmark graphs: balanced
/// contiguous class blocks, Bernoulli edges, Gaussian features around
/// unit-norm class means scaled by class_separation.
struct SbmSpec {
    Index n = 1000;
    Index classes = 5;
    Real p_intra = 0.05;
    Real p_inter = 0.002;
    Index feature_dim = 16;
    Real class_separation = 1.0;
    std::uint64_t seed = 0;

    void check() const {
        if (n < 1 || classes < 1 || n < classes)
            throw std::invalid_argument("SbmSpec: need n >= classes >= 1");
        if (feature_dim < 1) throw std::invalid_argument("SbmSpec: feature_dim must be >= 1");
        if (!(p_inter >= 0.0 && p_inter < p_intra && p_intra <= 1.0))
            throw std::invalid_argument("SbmSpec: need 0 <= p_inter < p_intra <= 1");
    }
};

namespace noise_detail {

struct EdgeList {
    std::vector<std::pair<Index, Index>> intra;  // u < v, same class
    std::vector<std::pair<Index, Index>> inter;  // u < v, different class
};

inline EdgeList split_edges(const Dataset& ds) {
    EdgeList el;
    const auto& a = ds.adjacency;
    for (Index u = 0; u < a.n_rows; ++u)
        for (Index k = a.row_begin(u); k < a.row_end(u); ++k) {
            const Index v = a.col_indices[k];
            if (v <= u) continue;
            if (ds.labels[u] == ds.labels[v])
                el.intra.emplace_back(u, v);
            else
                el.inter.emplace_back(u, v);
        }
    return el;
}

inline std::uint64_t pair_key(Index u, Index v, Index n) {
    return static_cast<std::uint64_t>(u) * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(v);
}

} // namespace noise_detail

/// Fraction of undirected edges joining nodes of different classes.
inline Real measure_structure_noise(const Dataset& ds) {
    auto el = noise_detail::split_edges(ds);
    const std::size_t total = el.intra.size() + el.inter.size();
    if (total == 0) throw std::invalid_argument("measure_structure_noise: graph has no edges");
    return static_cast<Real>(el.inter.size()) / static_cast<Real>(total);
}

/// Rewire edges until the inter-class fraction hits the target (to within
/// one edge). Raising the rate deletes random intra-class edges and adds
/// random non-adjacent inter-class pairs; lowering does the reverse. Node
/// count, edge count, symmetry and the empty diagonal are preserved.
inline Dataset inject_structure_noise(const Dataset& ds, const NoiseSpec& spec) {
    if (spec.kind != NoiseKind::structure)
        throw std::invalid_argument("inject_structure_noise: spec kind must be structure");
    spec.check();

    auto el = noise_detail::split_edges(ds);
    const long long total = static_cast<long long>(el.intra.size() + el.inter.size());
    if (total == 0) throw std::invalid_argument("inject_structure_noise: graph has no edges");

    const long long target_inter =
        std::clamp<long long>(std::llround(spec.target_rate * static_cast<Real>(total)), 0, total);
    long long delta = target_inter - static_cast<long long>(el.inter.size());
    if (delta == 0) return ds;

    // achievable range
    std::vector<long long> class_sizes(ds.num_classes, 0);
    for (Index c : ds.labels) ++class_sizes[c];
    long long intra_pairs = 0;
    for (long long s : class_sizes) intra_pairs += s * (s - 1) / 2;
    const long long all_pairs = static_cast<long long>(ds.n) * (ds.n - 1) / 2;
    const long long inter_pairs = all_pairs - intra_pairs;
    const long long free_inter = inter_pairs - static_cast<long long>(el.inter.size());
    const long long free_intra = intra_pairs - static_cast<long long>(el.intra.size());
    const long long max_inter =
        static_cast<long long>(el.inter.size()) + std::min<long long>(el.intra.size(), free_inter);
    const long long min_inter =
        static_cast<long long>(el.inter.size()) - std::min<long long>(el.inter.size(), free_intra);
    if (target_inter > max_inter || target_inter < min_inter)
        throw std::invalid_argument(
            "inject_structure_noise: target rate " + std::to_string(spec.target_rate) +
            " unreachable; achievable range [" +
            std::to_string(static_cast<Real>(min_inter) / total) + ", " +
            std::to_string(static_cast<Real>(max_inter) / total) + "]");

    std::unordered_set<std::uint64_t> present;
    present.reserve(2 * total);
    for (auto& [u, v] : el.intra) present.insert(noise_detail::pair_key(u, v, ds.n));
    for (auto& [u, v] : el.inter) present.insert(noise_detail::pair_key(u, v, ds.n));

    Rng rng(mix_seed(spec.seed, 0x4015e));
    std::uniform_int_distribution<Index> pick_node(0, ds.n - 1);

    const bool raising = delta > 0;
    auto& remove_pool = raising ? el.intra : el.inter;
    auto& add_pool = raising ? el.inter : el.intra;
    long long swaps = std::llabs(delta);

    for (long long s = 0; s < swaps; ++s) {
        // delete a random edge of the over-represented kind
        std::uniform_int_distribution<std::size_t> pick_edge(0, remove_pool.size() - 1);
        const std::size_t idx = pick_edge(rng);
        const auto removed = remove_pool[idx];
        remove_pool[idx] = remove_pool.back();
        remove_pool.pop_back();
        present.erase(noise_detail::pair_key(removed.first, removed.second, ds.n));

        // add a random currently-absent pair of the other kind
        bool added = false;
        for (int attempt = 0; attempt < 100000; ++attempt) {
            Index u = pick_node(rng), v = pick_node(rng);
            if (u == v) continue;
            if (u > v) std::swap(u, v);
            const bool same = ds.labels[u] == ds.labels[v];
            if (same == raising) continue;  // raising wants inter, lowering wants intra
            const auto key = noise_detail::pair_key(u, v, ds.n);
            if (present.count(key)) continue;
            present.insert(key);
            add_pool.emplace_back(u, v);
            added = true;
            break;
        }
        if (!added)
            throw std::runtime_error("inject_structure_noise: candidate sampling stalled");
    }

    Dataset out = ds;
    std::vector<std::tuple<Index, Index, Real>> trips;
    trips.reserve(2 * total);
    for (const auto& pool : {el.intra, el.inter})
        for (auto& [u, v] : pool) {
            trips.emplace_back(u, v, 1.0);
            trips.emplace_back(v, u, 1.0);
        }
    out.adjacency = SparseMatrix::from_triplets(ds.n, ds.n, std::move(trips));
    return out;
}

/// Flip floor(rate * count) training labels per class to a uniformly chosen
/// different class. Only the training LabelSet changes; ground truth stays
/// untouched for evaluation.
inline LabelSet inject_label_noise(const LabelSet& labels, const Dataset& ds, const NoiseSpec& spec) {
    if (spec.kind != NoiseKind::label)
        throw std::invalid_argument("inject_label_noise: spec kind must be label");
    spec.check();
    if (ds.num_classes < 2)
        throw std::invalid_argument("inject_label_noise: need at least two classes");

    std::vector<std::vector<Index>> by_class(ds.num_classes);
    for (Index v : labels.labeled_nodes) by_class[labels.label(v)].push_back(v);

    LabelSet out = labels;
    Rng rng(mix_seed(spec.seed, 0x1abe1));
    for (Index c = 0; c < ds.num_classes; ++c) {
        auto& pool = by_class[c];
        const Index flips = static_cast<Index>(
            std::floor(spec.target_rate * static_cast<Real>(pool.size()) + 1e-9));
        for (Index i = 0; i < flips; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
            std::swap(pool[i], pool[pick(rng)]);
            const Index v = pool[i];
            std::uniform_int_distribution<Index> other(0, ds.num_classes - 2);
            Index nc = other(rng);
            if (nc >= c) ++nc;  // uniform over the C-1 other classes
            out.label_of[v] = nc;
            for (Index k = 0; k < ds.num_classes; ++k) out.onehot(v, k) = (k == nc) ? 1.0 : 0.0;
        }
    }
    return out;
}

/// Balanced stochastic block model with Gaussian features.
inline Dataset generate_sbm(const SbmSpec& spec) {
    spec.check();
    Dataset ds;
    ds.n = spec.n;
    ds.f = spec.feature_dim;
    ds.num_classes = spec.classes;

    // contiguous blocks, sizes as even as possible
    ds.labels.resize(spec.n);
    {
        Index next = 0;
        for (Index c = 0; c < spec.classes; ++c) {
            const Index size = spec.n / spec.classes + (c < spec.n % spec.classes ? 1 : 0);
            for (Index i = 0; i < size; ++i) ds.labels[next++] = c;
        }
    }

    Rng rng(mix_seed(spec.seed, 0x5b3a));
    std::uniform_real_distribution<Real> u(0.0, 1.0);
    std::vector<std::tuple<Index, Index, Real>> trips;
    for (Index i = 0; i < spec.n; ++i)
        for (Index j = i + 1; j < spec.n; ++j) {
            const Real p = (ds.labels[i] == ds.labels[j]) ? spec.p_intra : spec.p_inter;
            if (u(rng) < p) {
                trips.emplace_back(i, j, 1.0);
                trips.emplace_back(j, i, 1.0);
            }
        }
    ds.adjacency = SparseMatrix::from_triplets(spec.n, spec.n, std::move(trips));

    std::normal_distribution<Real> gauss(0.0, 1.0);
    Matrix means(spec.classes, spec.feature_dim);
    for (Index c = 0; c < spec.classes; ++c) {
        Real norm2 = 0.0;
        for (Index j = 0; j < spec.feature_dim; ++j) {
            means(c, j) = gauss(rng);
            norm2 += means(c, j) * means(c, j);
        }
        const Real scale = spec.class_separation / std::sqrt(norm2);
        for (Index j = 0; j < spec.feature_dim; ++j) means(c, j) *= scale;
    }
    ds.features = Matrix(spec.n, spec.feature_dim);
    for (Index i = 0; i < spec.n; ++i) {
        const Real* mu = means.row(ds.labels[i]);
        Real* x = ds.features.row(i);
        for (Index j = 0; j < spec.feature_dim; ++j) x[j] = mu[j] + gauss(rng);
    }
    return ds;
}

} // namespace ptlab
