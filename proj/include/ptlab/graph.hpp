#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptlab/common.hpp"
#include "ptlab/dense.hpp"
#include "ptlab/sparse.hpp"

namespace ptlab {

// =============================================================================
// Containers
// =============================================================================

/// An undirected graph with node features and complete ground-truth labels.
/// Which labels are visible to a trainer is controlled by Split/LabelSet.
/// Immutable once constructed; safe to share across parallel runs.
struct Dataset {
    Index n = 0;          // node count
    Index f = 0;          // feature dimension
    Index num_classes = 0;
    SparseMatrix adjacency;  // symmetric, zero diagonal, unit weights
    Matrix features;         // n x f
    std::vector<Index> labels;  // per-node class id in [0, num_classes)
};

/// The labels exposed for training: the labeled node set and its one-hot
/// matrix (zero rows for unlabeled nodes).
struct LabelSet {
    std::vector<Index> labeled_nodes;  // sorted ascending
    Matrix onehot;                     // n x C
    std::vector<Index> label_of;       // -1 for unlabeled

    Index label(Index node) const { return label_of[node]; }
    bool is_labeled(Index node) const { return label_of[node] >= 0; }
};

struct Split {
    std::vector<Index> train;       // sorted
    std::vector<Index> early_stop;  // sorted
    std::vector<Index> test;        // sorted
    std::uint64_t seed = 0;

    bool operator==(const Split&) const = default;
};

enum class NormalizationStrategy {
    sym_selfloop,  // D~^{-1/2} (A+I) D~^{-1/2}
    sym,           // D^{-1/2} A D^{-1/2}
    row,           // D^{-1} A
};

inline const char* to_string(NormalizationStrategy s) {
    switch (s) {
        case NormalizationStrategy::sym_selfloop: return "sym-selfloop";
        case NormalizationStrategy::sym: return "sym";
        case NormalizationStrategy::row: return "row";
    }
    return "?";
}

// =============================================================================
// Operations
// =============================================================================

/// Degree-normalize a symmetric nonnegative adjacency with empty diagonal.
/// sym_selfloop adds unit self-loops first, which also keeps isolated nodes
/// well defined; sym and row reject degree-0 nodes by name.
inline SparseMatrix normalize_adjacency(const SparseMatrix& adj, NormalizationStrategy strategy) {
    if (adj.n_rows != adj.n_cols) throw std::invalid_argument("normalize_adjacency: matrix not square");
    const Index n = adj.n_rows;
    const bool selfloop = (strategy == NormalizationStrategy::sym_selfloop);

    std::vector<Real> degree(n, selfloop ? 1.0 : 0.0);
    for (Index i = 0; i < n; ++i)
        for (Index k = adj.row_begin(i); k < adj.row_end(i); ++k) {
            if (adj.col_indices[k] == i)
                throw std::invalid_argument("normalize_adjacency: self-loop present in input");
            if (adj.values[k] < 0.0)
                throw std::invalid_argument("normalize_adjacency: negative edge weight");
            degree[i] += adj.values[k];
        }
    if (!selfloop) {
        for (Index i = 0; i < n; ++i)
            if (degree[i] == 0.0)
                throw std::invalid_argument("normalize_adjacency: node " + std::to_string(i) +
                                            " has degree 0 (strategy " +
                                            std::string(to_string(strategy)) + ")");
    }

    SparseMatrix out(n, n);
    out.col_indices.reserve(adj.values.size() + (selfloop ? n : 0));
    out.values.reserve(adj.values.size() + (selfloop ? n : 0));
    for (Index i = 0; i < n; ++i) {
        Index k = adj.row_begin(i);
        const Index end = adj.row_end(i);
        bool diag_emitted = !selfloop;
        auto emit = [&](Index j, Real w) {
            // w / sqrt(d_i d_j) rather than w * d_i^{-1/2} * d_j^{-1/2}:
            // one rounding step, and mirrored entries come out identical
            Real v;
            switch (strategy) {
                case NormalizationStrategy::row: v = w / degree[i]; break;
                default: v = w / std::sqrt(degree[i] * degree[j]); break;
            }
            out.col_indices.push_back(j);
            out.values.push_back(v);
        };
        for (; k < end; ++k) {
            const Index j = adj.col_indices[k];
            if (!diag_emitted && j > i) {
                emit(i, 1.0);
                diag_emitted = true;
            }
            emit(j, adj.values[k]);
        }
        if (!diag_emitted) emit(i, 1.0);
        out.row_offsets[i + 1] = out.nnz();
    }
    out.validate();
    return out;
}

namespace detail {

inline std::vector<Index> sample_without_replacement(std::vector<Index>& pool, Index count, Rng& rng) {
    // partial Fisher-Yates; consumes the first `count` slots of pool
    for (Index i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    std::vector<Index> chosen(pool.begin(), pool.begin() + count);
    pool.erase(pool.begin(), pool.begin() + count);
    return chosen;
}

} // namespace detail

/// Sample a train / early-stop / test split: `per_class` training nodes from
/// every class, `early_stop_size` nodes from the remainder, rest is test.
/// Deterministic for a fixed seed.
inline Split make_split(const Dataset& ds, Index per_class, Index early_stop_size, std::uint64_t seed) {
    const Index c_count = ds.num_classes;
    if (static_cast<long long>(per_class) * c_count + early_stop_size >= ds.n)
        throw std::invalid_argument("make_split: split sizes exceed node count");

    std::vector<std::vector<Index>> by_class(c_count);
    for (Index i = 0; i < ds.n; ++i) by_class[ds.labels[i]].push_back(i);

    Rng rng(mix_seed(seed, 0x5917));
    Split sp;
    sp.seed = seed;
    std::vector<char> taken(ds.n, 0);
    for (Index c = 0; c < c_count; ++c) {
        if (static_cast<Index>(by_class[c].size()) < per_class)
            throw std::invalid_argument("make_split: class " + std::to_string(c) + " has only " +
                                        std::to_string(by_class[c].size()) + " nodes, need " +
                                        std::to_string(per_class));
        auto chosen = detail::sample_without_replacement(by_class[c], per_class, rng);
        for (Index v : chosen) {
            sp.train.push_back(v);
            taken[v] = 1;
        }
    }
    std::vector<Index> remainder;
    remainder.reserve(ds.n - sp.train.size());
    for (Index i = 0; i < ds.n; ++i)
        if (!taken[i]) remainder.push_back(i);
    auto es = detail::sample_without_replacement(remainder, early_stop_size, rng);
    sp.early_stop = std::move(es);
    sp.test = std::move(remainder);

    std::sort(sp.train.begin(), sp.train.end());
    std::sort(sp.early_stop.begin(), sp.early_stop.end());
    std::sort(sp.test.begin(), sp.test.end());
    return sp;
}

/// One-hot training labels for the split's train set.
inline LabelSet labelset_from_split(const Dataset& ds, const Split& split) {
    LabelSet ls;
    ls.labeled_nodes = split.train;
    ls.onehot = Matrix(ds.n, ds.num_classes);
    ls.label_of.assign(ds.n, -1);
    for (Index v : split.train) {
        ls.onehot(v, ds.labels[v]) = 1.0;
        ls.label_of[v] = ds.labels[v];
    }
    return ls;
}

} // namespace ptlab
