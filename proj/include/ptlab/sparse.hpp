#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "ptlab/common.hpp"
#include "ptlab/dense.hpp"

namespace ptlab {

/// Compressed sparse row matrix.
///
/// Invariants (checked by validate()):
///  - row_offsets has n_rows+1 entries, nondecreasing, last == values.size()
///  - column indices in [0, n_cols), strictly increasing within each row
///  - no explicit zeros stored
struct SparseMatrix {
    Index n_rows = 0;
    Index n_cols = 0;
    std::vector<Index> row_offsets;  // length n_rows + 1
    std::vector<Index> col_indices;
    std::vector<Real> values;

    SparseMatrix() : row_offsets(1, 0) {}
    SparseMatrix(Index rows, Index cols)
        : n_rows(rows), n_cols(cols), row_offsets(static_cast<std::size_t>(rows) + 1, 0) {}

    Index nnz() const { return static_cast<Index>(values.size()); }
    Index row_begin(Index i) const { return row_offsets[i]; }
    Index row_end(Index i) const { return row_offsets[i + 1]; }
    Index row_length(Index i) const { return row_offsets[i + 1] - row_offsets[i]; }

    void validate() const {
        if (row_offsets.size() != static_cast<std::size_t>(n_rows) + 1)
            throw std::invalid_argument("SparseMatrix: row_offsets length != n_rows+1");
        if (row_offsets.front() != 0 || row_offsets.back() != nnz())
            throw std::invalid_argument("SparseMatrix: bad offset bounds");
        for (Index i = 0; i < n_rows; ++i) {
            if (row_offsets[i + 1] < row_offsets[i])
                throw std::invalid_argument("SparseMatrix: decreasing row_offsets");
            for (Index k = row_begin(i); k < row_end(i); ++k) {
                if (col_indices[k] < 0 || col_indices[k] >= n_cols)
                    throw std::invalid_argument("SparseMatrix: column index out of range");
                if (k > row_begin(i) && col_indices[k] <= col_indices[k - 1])
                    throw std::invalid_argument("SparseMatrix: columns not strictly increasing in row " +
                                                std::to_string(i));
                if (values[k] == 0.0)
                    throw std::invalid_argument("SparseMatrix: explicit zero stored");
            }
        }
    }

    /// Build from unordered (row, col, value) triplets. Duplicate coordinates
    /// are rejected; zero values are dropped.
    static SparseMatrix from_triplets(Index rows, Index cols,
                                      std::vector<std::tuple<Index, Index, Real>> trips) {
        std::sort(trips.begin(), trips.end(), [](const auto& a, const auto& b) {
            if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
            return std::get<1>(a) < std::get<1>(b);
        });
        SparseMatrix m(rows, cols);
        std::vector<Index> counts(rows, 0);
        Index prev_r = -1, prev_c = -1;
        for (const auto& [r, c, v] : trips) {
            if (r < 0 || r >= rows || c < 0 || c >= cols)
                throw std::invalid_argument("from_triplets: index out of range");
            if (r == prev_r && c == prev_c)
                throw std::invalid_argument("from_triplets: duplicate entry at (" +
                                            std::to_string(r) + "," + std::to_string(c) + ")");
            prev_r = r;
            prev_c = c;
            if (v != 0.0) ++counts[r];
        }
        for (Index i = 0; i < rows; ++i) m.row_offsets[i + 1] = m.row_offsets[i] + counts[i];
        m.col_indices.resize(m.row_offsets[rows]);
        m.values.resize(m.row_offsets[rows]);
        std::vector<Index> cursor(m.row_offsets.begin(), m.row_offsets.end() - 1);
        for (const auto& [r, c, v] : trips) {
            if (v == 0.0) continue;
            const Index pos = cursor[r]++;
            m.col_indices[pos] = c;
            m.values[pos] = v;
        }
        m.validate();
        return m;
    }

    Real get(Index i, Index j) const {
        for (Index k = row_begin(i); k < row_end(i); ++k)
            if (col_indices[k] == j) return values[k];
        return 0.0;
    }

    bool has_entry(Index i, Index j) const {
        const auto* base = col_indices.data();
        return std::binary_search(base + row_begin(i), base + row_end(i), j);
    }

    SparseMatrix transpose() const {
        SparseMatrix t(n_cols, n_rows);
        std::vector<Index> counts(n_cols, 0);
        for (Index c : col_indices) ++counts[c];
        t.row_offsets.assign(static_cast<std::size_t>(n_cols) + 1, 0);
        for (Index j = 0; j < n_cols; ++j) t.row_offsets[j + 1] = t.row_offsets[j] + counts[j];
        t.col_indices.resize(values.size());
        t.values.resize(values.size());
        std::vector<Index> cursor(t.row_offsets.begin(), t.row_offsets.end() - 1);
        for (Index i = 0; i < n_rows; ++i) {
            for (Index k = row_begin(i); k < row_end(i); ++k) {
                const Index j = col_indices[k];
                const Index pos = cursor[j]++;
                t.col_indices[pos] = i;
                t.values[pos] = values[k];
            }
        }
        return t;
    }

    Matrix to_dense() const {
        Matrix d(n_rows, n_cols);
        for (Index i = 0; i < n_rows; ++i)
            for (Index k = row_begin(i); k < row_end(i); ++k)
                d(i, col_indices[k]) = values[k];
        return d;
    }
};

/// y = A * x for dense x (n_cols x d). The inner loops stream whole rows of
/// x and y, and each output row is accumulated in a fixed order, so results
/// are bit-reproducible.
inline Matrix spmm(const SparseMatrix& a, const Matrix& x) {
    if (a.n_cols != x.rows) throw std::invalid_argument("spmm: dimension mismatch");
    Matrix y(a.n_rows, x.cols);
    for (Index i = 0; i < a.n_rows; ++i) {
        Real* yrow = y.row(i);
        for (Index k = a.row_begin(i); k < a.row_end(i); ++k) {
            const Real v = a.values[k];
            const Real* xrow = x.row(a.col_indices[k]);
            for (Index j = 0; j < x.cols; ++j) yrow[j] += v * xrow[j];
        }
    }
    return y;
}

/// Stored-entry symmetry check: (i,j) present iff (j,i) present with the
/// same value. Returns the number of mismatched entries.
inline Index count_asymmetric_entries(const SparseMatrix& a) {
    if (a.n_rows != a.n_cols) return a.nnz();
    Index bad = 0;
    for (Index i = 0; i < a.n_rows; ++i)
        for (Index k = a.row_begin(i); k < a.row_end(i); ++k)
            if (a.get(a.col_indices[k], i) != a.values[k]) ++bad;
    return bad;
}

} // namespace ptlab
