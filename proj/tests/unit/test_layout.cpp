#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "tkg/errors.hpp"
#include "tkg/layout.hpp"

using namespace tkg;
using fixture::P;

namespace {

EmbeddingTable planar(std::uint64_t seed, int n, std::size_t dim) {
    Rng rng(seed);
    EmbeddingTable t(dim);
    for (int i = 0; i < n; ++i) {
        std::vector<float> v(dim, 0.0f);
        v[0] = static_cast<float>(10 * standard_normal(rng));
        v[1] = static_cast<float>(3 * standard_normal(rng));
        t.add("p" + std::to_string(i), v);
    }
    return t;
}

}  // namespace

TEST_CASE("pca recovers rank-2 input up to rotation") {
    const auto t = planar(1, 80, 768);
    const auto r = reduce_to_2d(t, LayoutMethod::pca, 0);
    double worst = 0;
    for (std::size_t i = 0; i < t.size(); ++i)
        for (std::size_t j = i + 1; j < t.size(); ++j) {
            const double hi = oracle::dist(t.row(i), t.row(j));
            worst = std::max(worst, std::abs(hi - oracle::dist2d(r.coords[i], r.coords[j])));
        }
    CHECK(worst <= 1e-6 * 40);  // float inputs; distances are ~30 units
    CHECK(trustworthiness(t, r.coords, 5) == doctest::Approx(1.0));
}

TEST_CASE("pca on identical vectors collapses") {
    EmbeddingTable t(16);
    for (int i = 0; i < 10; ++i) t.add("x" + std::to_string(i), std::vector<float>(16, 0.25f));
    const auto r = reduce_to_2d(t, LayoutMethod::pca, 0);
    for (const auto& p : r.coords) CHECK(p == r.coords[0]);
}

TEST_CASE("reduce_to_2d contract") {
    EmbeddingTable one(4);
    one.add("a", std::vector<float>{1, 2, 3, 4});
    CHECK_THROWS_AS(reduce_to_2d(one, LayoutMethod::pca, 0), ContractViolation);
    EmbeddingTable bad(2);
    bad.add("a", std::vector<float>{1, 2});
    bad.add("b", std::vector<float>{NAN, 2});
    CHECK_THROWS_AS(reduce_to_2d(bad, LayoutMethod::neighbor_embedding, 0), ValidationError);
    CHECK(parse_layout_method("pca") == LayoutMethod::pca);
    CHECK(parse_layout_method("neighbor_embedding") == LayoutMethod::neighbor_embedding);
    CHECK_THROWS_AS(parse_layout_method("tsne3d"), ConfigError);
}

TEST_CASE("neighbor embedding separates clusters and is deterministic") {
    std::vector<int> labels;
    const auto t = fixture::gaussian_clusters(5, 60, 64, &labels);
    const auto a = reduce_to_2d(t, LayoutMethod::neighbor_embedding, 3);
    const auto b = reduce_to_2d(t, LayoutMethod::neighbor_embedding, 3);
    CHECK(a.coords == b.coords);
    for (const auto& p : a.coords) CHECK((std::isfinite(p.x) && std::isfinite(p.y)));
    CHECK(trustworthiness(t, a.coords, 10) >= 0.8);
    double within = 0, cross = 0;
    int nw = 0, nc = 0;
    for (std::size_t i = 0; i < t.size(); ++i)
        for (std::size_t j = i + 1; j < t.size(); ++j) {
            const double d = oracle::dist2d(a.coords[i], a.coords[j]);
            if (labels[i] == labels[j]) within += d, ++nw;
            else cross += d, ++nc;
        }
    CHECK(within / nw < cross / nc);
}

TEST_CASE("trustworthiness matches the textbook formula") {
    std::vector<int> labels;
    const auto t = fixture::gaussian_clusters(6, 40, 32, &labels, 2.0, 3.0);
    const auto r = reduce_to_2d(t, LayoutMethod::pca, 0);
    for (int k : {1, 5, 10}) CHECK(trustworthiness(t, r.coords, k) == doctest::Approx(oracle::trustworthiness(t, r.coords, k)));

    // Shuffled coordinates are worse.
    auto shuffled = r.coords;
    Rng rng(1);
    seeded_shuffle(shuffled, rng);
    CHECK(trustworthiness(t, shuffled, 10) < trustworthiness(t, r.coords, 10) - 0.1);

    // Equidistant points (basis vectors): any neighbor choice is valid.
    EmbeddingTable tri(3);
    tri.add("a", std::vector<float>{1, 0, 0});
    tri.add("b", std::vector<float>{0, 1, 0});
    tri.add("c", std::vector<float>{0, 0, 1});
    const std::vector<Point2> lo{{0, 0}, {5, 0}, {0, 1}};
    CHECK(trustworthiness(tri, lo, 1) == 1.0);

    CHECK_THROWS_AS(trustworthiness(t, r.coords, 0), ContractViolation);
    CHECK_THROWS_AS(trustworthiness(t, r.coords, static_cast<int>(t.size())), ContractViolation);
    const double s = trustworthiness_sampled(t, r.coords, 10, 60, 2);
    CHECK(s > 0.5);
    CHECK(s <= 1.0);
}

TEST_CASE("exact_knn orders by distance then row") {
    const std::vector<double> pts{0, 0, 1, 0, -1, 0, 0, 3};
    const auto knn = exact_knn(pts, 4, 2, 2);
    CHECK(knn[0][0].first == 1);
    CHECK(knn[0][1].first == 2);
    CHECK(knn[3].size() == 2);
}

TEST_CASE("fit_ab matches known UMAP constants") {
    const auto [a, b] = fit_ab(1.0, 0.1);
    CHECK(a == doctest::Approx(1.577).epsilon(0.01));
    CHECK(b == doctest::Approx(0.895).epsilon(0.01));
}

TEST_CASE("node_size") {
    CHECK(node_size(0) == 2.0);
    CHECK(node_size(2) == doctest::Approx(2.0 + 1.5 * std::log(3.0)));
    CHECK(node_size(2) == doctest::Approx(3.648).epsilon(1e-3));
    for (int c = 0; c < 500; ++c) CHECK(node_size(c) < node_size(c + 1));
    CHECK(node_size(4, {1.0, 2.0}) == doctest::Approx(1.0 + 2.0 * std::log(5.0)));
    CHECK_THROWS_AS(node_size(-1), ContractViolation);
}

TEST_CASE("make_node_views") {
    std::vector<PaperRecord> papers;
    for (int i = 0; i < 10; ++i) papers.push_back({"P" + std::to_string(i), "t", "", 2010 + i, "v", 0, {"A"}, {}});
    papers.push_back({"Q", "t", "", 2021, "v", 0, {"B"}, {"D"}});
    std::vector<BioEntityRecord> bio{{"B1", "gene1", EmbeddingVector::basis(2, 0), std::nullopt},
                                     {"B2", "gene2", std::nullopt, Point2{7, 8}}};
    const auto c = Corpus::build(papers, {{"A", "a", "", 0, 0, false}, {"B", "b", "", 0, 0, true}},
                                 {{"D", "d", "", {}}}, bio);
    LayoutResult layout;
    layout.ids = {"A", "D", "B1"};
    layout.coords = {{1, 1}, {2, 2}, {3, 3}};
    const auto r = make_node_views(c, layout);
    // External author B has no coordinates and is not a node.
    REQUIRE(r.views.size() == 4);
    std::map<std::string, NodeView> by;
    for (const auto& v : r.views) by[v.node_id] = v;
    CHECK(by["A"].kind == NodeKind::author);
    CHECK(shape_of(by["A"].kind) == NodeShape::circle);
    CHECK(by["A"].size == doctest::Approx(node_size(10)));
    CHECK(by["A"].career_start_year == 2010);
    CHECK(shape_of(by["D"].kind) == NodeShape::square);
    CHECK(by["D"].publication_count == 1);
    CHECK(shape_of(by["B1"].kind) == NodeShape::square);
    CHECK(by["B2"].x == 7);
    CHECK(by["B2"].y == 8);
    for (const auto& v : r.views) CHECK(v.size > 0);

    fixture::TempDir dir;
    write_layout_jsonl(r.views, dir / "layout.jsonl");
    CHECK(read_layout_jsonl(dir / "layout.jsonl") == r.views);
}
