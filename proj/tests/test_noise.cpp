#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "ptlab/graph.hpp"
#include "ptlab/noise.hpp"

using namespace ptlab;

namespace {

Dataset labeled_graph(Index n, std::vector<Index> labels, std::vector<std::pair<Index, Index>> edges) {
    Dataset ds;
    ds.n = n;
    ds.f = 1;
    ds.num_classes = 0;
    for (Index c : labels) ds.num_classes = std::max(ds.num_classes, c + 1);
    ds.labels = std::move(labels);
    std::vector<std::tuple<Index, Index, Real>> trips;
    for (auto [u, v] : edges) {
        trips.emplace_back(u, v, 1.0);
        trips.emplace_back(v, u, 1.0);
    }
    ds.adjacency = SparseMatrix::from_triplets(n, n, std::move(trips));
    ds.features = Matrix(n, 1);
    return ds;
}

NoiseSpec structure_spec(Real rate, std::uint64_t seed = 1) {
    return NoiseSpec{NoiseKind::structure, rate, seed};
}

} // namespace

TEST_CASE("measure_structure_noise: pure, mixed and empty graphs") {
    // all same class
    auto same = labeled_graph(3, {0, 0, 0}, {{0, 1}, {1, 2}});
    CHECK(measure_structure_noise(same) == 0.0);

    // complete bipartite between two classes
    auto bip = labeled_graph(4, {0, 0, 1, 1}, {{0, 2}, {0, 3}, {1, 2}, {1, 3}});
    CHECK(measure_structure_noise(bip) == 1.0);

    // one of three edges crosses classes
    auto third = labeled_graph(4, {0, 0, 0, 1}, {{0, 1}, {1, 2}, {2, 3}});
    CHECK(measure_structure_noise(third) == Catch::Approx(1.0 / 3.0).epsilon(1e-15));

    auto empty = labeled_graph(3, {0, 1, 0}, {});
    CHECK_THROWS_AS(measure_structure_noise(empty), std::invalid_argument);
}

TEST_CASE("structure injection at the current rate is a no-op") {
    auto ds = labeled_graph(4, {0, 0, 0, 1}, {{0, 1}, {1, 2}, {2, 3}});
    const Real cur = measure_structure_noise(ds);
    Dataset out = inject_structure_noise(ds, structure_spec(cur));
    CHECK(max_abs_diff(out.adjacency.to_dense(), ds.adjacency.to_dense()) == 0.0);
}

TEST_CASE("structure injection hits the target and preserves graph shape") {
    SbmSpec spec;
    spec.n = 300;
    spec.classes = 3;
    spec.p_intra = 0.08;
    spec.p_inter = 0.005;
    spec.feature_dim = 3;
    spec.seed = 7;
    Dataset ds = generate_sbm(spec);
    const Index edges_before = ds.adjacency.nnz();
    const Real edge_count = edges_before / 2.0;

    for (Real target : {0.30, 0.65, 0.02}) {
        Dataset out = inject_structure_noise(ds, structure_spec(target, 3));
        CHECK(out.adjacency.nnz() == edges_before);  // edge count preserved
        CHECK(count_asymmetric_entries(out.adjacency) == 0);
        for (Index i = 0; i < out.n; ++i) CHECK(out.adjacency.get(i, i) == 0.0);
        const Real achieved = measure_structure_noise(out);
        CHECK(std::abs(achieved - target) <= 1.0 / edge_count);
    }

    // determinism
    Dataset a = inject_structure_noise(ds, structure_spec(0.5, 9));
    Dataset b = inject_structure_noise(ds, structure_spec(0.5, 9));
    CHECK(max_abs_diff(a.adjacency.to_dense(), b.adjacency.to_dense()) == 0.0);
    Dataset c = inject_structure_noise(ds, structure_spec(0.5, 10));
    CHECK(max_abs_diff(a.adjacency.to_dense(), c.adjacency.to_dense()) > 0.0);
}

TEST_CASE("structure injection reports the achievable range when impossible") {
    // two classes fully bipartite: no intra pair exists to rewire into
    auto ds = labeled_graph(4, {0, 0, 1, 1}, {{0, 2}, {0, 3}, {1, 2}, {1, 3}});
    CHECK_THROWS_WITH(inject_structure_noise(ds, structure_spec(0.0)),
                      Catch::Matchers::ContainsSubstring("achievable range"));
    // the other direction: a one-class graph can never gain inter edges
    auto mono = labeled_graph(3, {0, 0, 0}, {{0, 1}});
    CHECK_THROWS_WITH(inject_structure_noise(mono, structure_spec(0.9)),
                      Catch::Matchers::ContainsSubstring("achievable range"));
}

TEST_CASE("label noise flips floor(rate * count) per class, never to the same class") {
    SbmSpec spec;
    spec.n = 400;
    spec.classes = 4;
    spec.p_intra = 0.05;
    spec.p_inter = 0.01;
    spec.seed = 2;
    Dataset ds = generate_sbm(spec);
    Split sp = make_split(ds, 20, 50, 1);
    LabelSet clean = labelset_from_split(ds, sp);

    SECTION("rate zero is the identity") {
        LabelSet out = inject_label_noise(clean, ds, {NoiseKind::label, 0.0, 5});
        CHECK(out.label_of == clean.label_of);
    }

    SECTION("rate 0.15 flips exactly 3 of 20 per class") {
        LabelSet out = inject_label_noise(clean, ds, {NoiseKind::label, 0.15, 5});
        std::vector<Index> flipped_per_class(ds.num_classes, 0);
        Index flipped = 0;
        for (Index v : clean.labeled_nodes) {
            REQUIRE(out.label_of[v] >= 0);
            if (out.label_of[v] != clean.label_of[v]) {
                ++flipped;
                ++flipped_per_class[clean.label_of[v]];
                // onehot row matches the new label
                CHECK(out.onehot(v, out.label_of[v]) == 1.0);
            }
        }
        CHECK(flipped == 3 * ds.num_classes);
        for (Index c : flipped_per_class) CHECK(c == 3);
        CHECK(out.labeled_nodes == clean.labeled_nodes);  // |V_l| unchanged
    }

    SECTION("determinism and seed sensitivity") {
        LabelSet a = inject_label_noise(clean, ds, {NoiseKind::label, 0.3, 5});
        LabelSet b = inject_label_noise(clean, ds, {NoiseKind::label, 0.3, 5});
        LabelSet c = inject_label_noise(clean, ds, {NoiseKind::label, 0.3, 6});
        CHECK(a.label_of == b.label_of);
        CHECK(a.label_of != c.label_of);
    }

    SECTION("single class has nowhere to flip") {
        Dataset mono = labeled_graph(30, std::vector<Index>(30, 0), {{0, 1}});
        LabelSet ls;
        ls.labeled_nodes = {0, 1, 2};
        ls.label_of.assign(30, -1);
        for (Index v : ls.labeled_nodes) ls.label_of[v] = 0;
        ls.onehot = Matrix(30, 1);
        for (Index v : ls.labeled_nodes) ls.onehot(v, 0) = 1.0;
        CHECK_THROWS_AS(inject_label_noise(ls, mono, {NoiseKind::label, 0.5, 1}),
                        std::invalid_argument);
    }
}

TEST_CASE("generate_sbm: determinism, purity at p_inter = 0, edge-count moments") {
    SbmSpec spec;
    spec.n = 500;
    spec.classes = 5;
    spec.p_intra = 0.06;
    spec.p_inter = 0.004;
    spec.feature_dim = 8;
    spec.class_separation = 2.0;
    spec.seed = 13;

    Dataset a = generate_sbm(spec);
    Dataset b = generate_sbm(spec);
    CHECK(a.labels == b.labels);
    CHECK(max_abs_diff(a.features, b.features) == 0.0);
    CHECK(max_abs_diff(a.adjacency.to_dense(), b.adjacency.to_dense()) == 0.0);

    SECTION("no inter edges when p_inter = 0") {
        SbmSpec pure = spec;
        pure.p_inter = 0.0;
        Dataset ds = generate_sbm(pure);
        CHECK(measure_structure_noise(ds) == 0.0);
    }

    SECTION("edge count within 5 sigma of the binomial mean") {
        long long intra_pairs = 0;
        std::vector<long long> sizes(spec.classes, 0);
        for (Index c : a.labels) ++sizes[c];
        for (long long s : sizes) intra_pairs += s * (s - 1) / 2;
        const long long all_pairs = static_cast<long long>(spec.n) * (spec.n - 1) / 2;
        const long long inter_pairs = all_pairs - intra_pairs;

        const Real mean = intra_pairs * spec.p_intra + inter_pairs * spec.p_inter;
        const Real var = intra_pairs * spec.p_intra * (1 - spec.p_intra) +
                         inter_pairs * spec.p_inter * (1 - spec.p_inter);
        const Real observed = a.adjacency.nnz() / 2.0;
        CHECK(std::abs(observed - mean) < 5.0 * std::sqrt(var));
    }

    SECTION("invalid probabilities are rejected") {
        SbmSpec bad = spec;
        bad.p_inter = 0.5;
        bad.p_intra = 0.1;
        CHECK_THROWS_AS(generate_sbm(bad), std::invalid_argument);
    }
}
