#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "ptlab/common.hpp"

namespace ptlab {

/// Dense row-major matrix of doubles. Rows are contiguous, so row-wise
/// kernels (softmax, argmax, sparse matmat) stream through memory.
struct Matrix {
    Index rows = 0;
    Index cols = 0;
    std::vector<Real> data;

    Matrix() = default;
    Matrix(Index r, Index c, Real fill = 0.0)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

    static Matrix identity(Index n) {
        Matrix m(n, n);
        for (Index i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    Real& operator()(Index i, Index j) {
        return data[static_cast<std::size_t>(i) * cols + j];
    }
    Real operator()(Index i, Index j) const {
        return data[static_cast<std::size_t>(i) * cols + j];
    }

    Real* row(Index i) { return data.data() + static_cast<std::size_t>(i) * cols; }
    const Real* row(Index i) const { return data.data() + static_cast<std::size_t>(i) * cols; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    void fill(Real v) { std::fill(data.begin(), data.end(), v); }

    bool all_finite() const {
        for (Real v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

/// max_ij |a_ij - b_ij|
inline Real max_abs_diff(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
    Real m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

/// c = a * b
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dimensions differ");
    Matrix c(a.rows, b.cols);
    for (Index i = 0; i < a.rows; ++i) {
        const Real* arow = a.row(i);
        Real* crow = c.row(i);
        for (Index p = 0; p < a.cols; ++p) {
            const Real aip = arow[p];
            if (aip == 0.0) continue;
            const Real* brow = b.row(p);
            for (Index j = 0; j < b.cols; ++j) crow[j] += aip * brow[j];
        }
    }
    return c;
}

/// c = a^T * b  (a is n x m, b is n x k, result m x k)
inline Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) throw std::invalid_argument("matmul_at_b: row counts differ");
    Matrix c(a.cols, b.cols);
    for (Index p = 0; p < a.rows; ++p) {
        const Real* arow = a.row(p);
        const Real* brow = b.row(p);
        for (Index i = 0; i < a.cols; ++i) {
            const Real api = arow[i];
            if (api == 0.0) continue;
            Real* crow = c.row(i);
            for (Index j = 0; j < b.cols; ++j) crow[j] += api * brow[j];
        }
    }
    return c;
}

/// c = a * b^T  (a is n x m, b is k x m, result n x k)
inline Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) throw std::invalid_argument("matmul_a_bt: column counts differ");
    Matrix c(a.rows, b.rows);
    for (Index i = 0; i < a.rows; ++i) {
        const Real* arow = a.row(i);
        Real* crow = c.row(i);
        for (Index j = 0; j < b.rows; ++j) {
            const Real* brow = b.row(j);
            Real s = 0.0;
            for (Index p = 0; p < a.cols; ++p) s += arow[p] * brow[p];
            crow[j] = s;
        }
    }
    return c;
}

/// y = alpha*a + beta*b, elementwise
inline Matrix lincomb(Real alpha, const Matrix& a, Real beta, const Matrix& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("lincomb: shape mismatch");
    Matrix y(a.rows, a.cols);
    for (std::size_t i = 0; i < a.data.size(); ++i)
        y.data[i] = alpha * a.data[i] + beta * b.data[i];
    return y;
}

/// index of the row maximum; ties resolve to the lowest column index
inline Index argmax_row(const Matrix& m, Index i) {
    const Real* r = m.row(i);
    Index best = 0;
    for (Index j = 1; j < m.cols; ++j)
        if (r[j] > r[best]) best = j;
    return best;
}

} // namespace ptlab
