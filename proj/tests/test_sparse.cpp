#include <catch2/catch_amalgamated.hpp>

#include "ptlab/sparse.hpp"

using namespace ptlab;

namespace {

SparseMatrix random_sparse(Index rows, Index cols, Real density, Rng& rng) {
    std::uniform_real_distribution<Real> u(0.0, 1.0);
    std::uniform_real_distribution<Real> val(-2.0, 2.0);
    std::vector<std::tuple<Index, Index, Real>> trips;
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j)
            if (u(rng) < density) {
                Real v = val(rng);
                if (v == 0.0) v = 1.0;
                trips.emplace_back(i, j, v);
            }
    return SparseMatrix::from_triplets(rows, cols, std::move(trips));
}

} // namespace

TEST_CASE("from_triplets builds valid CSR from shuffled input") {
    std::vector<std::tuple<Index, Index, Real>> trips = {
        {2, 1, 3.0}, {0, 2, 1.0}, {0, 0, 2.0}, {2, 0, -1.0},
    };
    auto m = SparseMatrix::from_triplets(3, 3, trips);
    REQUIRE(m.nnz() == 4);
    CHECK(m.get(0, 0) == 2.0);
    CHECK(m.get(0, 2) == 1.0);
    CHECK(m.get(2, 1) == 3.0);
    CHECK(m.get(2, 0) == -1.0);
    CHECK(m.get(1, 1) == 0.0);
    CHECK(m.row_length(1) == 0);
    REQUIRE_NOTHROW(m.validate());
}

TEST_CASE("from_triplets drops zeros and rejects duplicates and range errors") {
    auto m = SparseMatrix::from_triplets(2, 2, {{0, 0, 0.0}, {1, 1, 5.0}});
    CHECK(m.nnz() == 1);

    CHECK_THROWS_AS(SparseMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {0, 1, 2.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(SparseMatrix::from_triplets(2, 2, {{0, 2, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(SparseMatrix::from_triplets(2, 2, {{-1, 0, 1.0}}), std::invalid_argument);
}

TEST_CASE("spmm matches the dense product on random matrices") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const Index n = std::uniform_int_distribution<Index>(1, 25)(rng);
        const Index m = std::uniform_int_distribution<Index>(1, 25)(rng);
        const Index d = std::uniform_int_distribution<Index>(1, 6)(rng);
        auto a = random_sparse(n, m, 0.3, rng);
        Matrix x(m, d);
        std::normal_distribution<Real> g(0.0, 1.0);
        for (Real& v : x.data) v = g(rng);

        Matrix via_sparse = spmm(a, x);
        Matrix via_dense = matmul(a.to_dense(), x);
        CHECK(max_abs_diff(via_sparse, via_dense) < 1e-13);
    }
}

TEST_CASE("transpose round-trips and swaps entries") {
    Rng rng(5);
    auto a = random_sparse(12, 7, 0.4, rng);
    auto t = a.transpose();
    REQUIRE(t.n_rows == a.n_cols);
    REQUIRE(t.n_cols == a.n_rows);
    REQUIRE_NOTHROW(t.validate());
    for (Index i = 0; i < a.n_rows; ++i)
        for (Index k = a.row_begin(i); k < a.row_end(i); ++k)
            CHECK(t.get(a.col_indices[k], i) == a.values[k]);
    auto tt = t.transpose();
    CHECK(max_abs_diff(tt.to_dense(), a.to_dense()) == 0.0);
}

TEST_CASE("validate flags broken invariants") {
    SparseMatrix m(2, 2);
    m.col_indices = {1, 0};
    m.values = {1.0, 1.0};
    m.row_offsets = {0, 1, 2};
    REQUIRE_NOTHROW(m.validate());

    SparseMatrix unsorted = m;
    unsorted.row_offsets = {0, 2, 2};  // row 0 now holds cols {1,0}, decreasing
    CHECK_THROWS_AS(unsorted.validate(), std::invalid_argument);

    SparseMatrix dup = m;
    dup.col_indices = {1, 1};
    dup.row_offsets = {0, 2, 2};  // duplicate column in row 0
    CHECK_THROWS_AS(dup.validate(), std::invalid_argument);

    SparseMatrix zero = m;
    zero.values[0] = 0.0;
    CHECK_THROWS_AS(zero.validate(), std::invalid_argument);

    SparseMatrix bad_offsets = m;
    bad_offsets.row_offsets = {0, 2, 1};
    CHECK_THROWS_AS(bad_offsets.validate(), std::invalid_argument);
}

TEST_CASE("count_asymmetric_entries sees one-sided edges") {
    auto sym = SparseMatrix::from_triplets(3, 3, {{0, 1, 1.0}, {1, 0, 1.0}});
    CHECK(count_asymmetric_entries(sym) == 0);
    auto asym = SparseMatrix::from_triplets(3, 3, {{0, 1, 1.0}});
    CHECK(count_asymmetric_entries(asym) == 1);
    auto unequal = SparseMatrix::from_triplets(3, 3, {{0, 1, 1.0}, {1, 0, 2.0}});
    CHECK(count_asymmetric_entries(unequal) == 2);
}
