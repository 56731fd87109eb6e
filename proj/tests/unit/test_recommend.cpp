#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "tkg/errors.hpp"
#include "tkg/recommend.hpp"

using namespace tkg;
using fixture::P;

namespace {

void check_against_scan(const std::vector<Recommendation>& got, const std::vector<oracle::Scored>& want) {
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].candidate_id == want[i].id);
        CHECK(std::abs(got[i].score - want[i].score) < 1e-6);
        CHECK(got[i].rank == static_cast<int>(i) + 1);
    }
}

}  // namespace

TEST_CASE("cosine") {
    Rng rng(1);
    const EmbeddingVector a(fixture::gaussian(rng, 768)), b(fixture::gaussian(rng, 768));
    CHECK(cosine(a, a) == doctest::Approx(1.0));
    CHECK(cosine(EmbeddingVector::basis(8, 1), EmbeddingVector::basis(8, 5)) == 0.0);
    CHECK(std::abs(cosine(a, b) - oracle::cosine(a.values(), b.values())) < 1e-6);
    CHECK_THROWS_AS(cosine(a, EmbeddingVector::zeros(768)), ContractViolation);
    CHECK_THROWS_AS(cosine(a, EmbeddingVector::basis(3, 0)), ContractViolation);
}

TEST_CASE("search_by_vector exact equals the scan oracle") {
    Rng rng(2);
    const auto table = fixture::random_table(rng, 1000, 64);
    const auto index = SimilarityIndex::build(table);
    for (int trial = 0; trial < 20; ++trial) {
        const EmbeddingVector q(fixture::gaussian(rng, 64));
        std::unordered_set<std::string> exclude;
        for (int e = 0; e < 30; ++e) exclude.insert(table.id(uniform_index(rng, table.size())));
        const int k = 1 + static_cast<int>(uniform_index(rng, 50));
        check_against_scan(search_by_vector(q, index, k, exclude), oracle::scan_top_k(q.values(), table, k, exclude));
    }
    const auto self = search_by_vector(table.vector(17), index, 3);
    CHECK(self[0].candidate_id == table.id(17));
    CHECK(self[0].score == doctest::Approx(1.0));

    std::unordered_set<std::string> all(table.ids().begin(), table.ids().end());
    CHECK(search_by_vector(table.vector(0), index, 5, all).empty());
    CHECK_THROWS_AS(search_by_vector(table.vector(0), index, 0), ContractViolation);
    CHECK_THROWS_AS(search_by_vector(EmbeddingVector::zeros(64), index, 3), ContractViolation);
}

TEST_CASE("ties are broken by id") {
    EmbeddingTable t(2);
    t.add("c", std::vector<float>{1, 0});
    t.add("a", std::vector<float>{1, 0});
    t.add("b", std::vector<float>{0, 1});
    const auto r = search_by_vector(EmbeddingVector(std::vector<float>{1, 0}), SimilarityIndex::build(t), 3);
    REQUIRE(r.size() == 3);
    CHECK(r[0].candidate_id == "a");
    CHECK(r[1].candidate_id == "c");
    CHECK(r[2].candidate_id == "b");
}

TEST_CASE("approximate search recall on 10k vectors") {
    // Clustered data; IVF recall on isotropic noise is not meaningful.
    Rng rng(3);
    const std::size_t dim = 64;
    std::vector<std::vector<float>> centers;
    for (int c = 0; c < 50; ++c) centers.push_back(fixture::unit(rng, dim));
    EmbeddingTable table(dim);
    for (int i = 0; i < 10000; ++i) {
        auto v = fixture::gaussian(rng, dim, 0.08);
        const auto& c = centers[uniform_index(rng, centers.size())];
        for (std::size_t d = 0; d < dim; ++d) v[d] += c[d];
        table.add("V" + std::to_string(100000 + i), v);
    }
    const auto index = SimilarityIndex::build(table, ApproxParams{.seed = 1});
    REQUIRE(index.has_approximate());
    const int k = 10;
    double hits = 0, total = 0;
    for (int trial = 0; trial < 100; ++trial) {
        auto q = fixture::gaussian(rng, dim, 0.08);
        const auto& c = centers[uniform_index(rng, centers.size())];
        for (std::size_t d = 0; d < dim; ++d) q[d] += c[d];
        const EmbeddingVector qv(q);
        const auto exact = search_by_vector(qv, index, k);
        const auto approx = search_by_vector(qv, index, k, {}, SearchMode::approximate);
        std::set<std::string> want;
        for (const auto& r : exact) want.insert(r.candidate_id);
        for (const auto& r : approx) hits += want.count(r.candidate_id);
        total += k;
    }
    CHECK(hits / total >= 0.95);
}

TEST_CASE("rebuilding an index gives identical rankings") {
    Rng rng(4);
    const auto table = fixture::random_table(rng, 300, 32);
    const auto a = SimilarityIndex::build(table), b = SimilarityIndex::build(table);
    CHECK(a.version() == b.version());
    const auto q = table.vector(5);
    CHECK(search_by_vector(q, a, 40) == search_by_vector(q, b, 40));
}

TEST_CASE("top_k_collaborators") {
    // Hand-placed 5-author fixture: A co-authored with B only.
    const auto c = fixture::corpus({{"P1", 2021, {"A", "B"}}, {"P2", 2021, {"C"}}, {"P3", 2021, {"D"}},
                                    {"P4", 2021, {"E"}}});
    const auto g = build_coauthor_graph(c);
    EmbeddingTable t(2);
    t.add("A", std::vector<float>{1, 0});
    t.add("B", std::vector<float>{1, 0.01f});
    t.add("C", std::vector<float>{1, 0.5f});
    t.add("D", std::vector<float>{0, 1});
    t.add("E", std::vector<float>{-1, 0});
    const auto idx = SimilarityIndex::build(t);
    const auto r = top_k_collaborators("A", idx, g, 30);
    std::unordered_set<std::string> ex{"A", "B"};
    check_against_scan(r, oracle::scan_top_k(t.row(0), t, 30, ex));
    REQUIRE(r.size() == 3);
    CHECK(r[0].candidate_id == "C");
    CHECK(r[0].exclusion_checked);
    CHECK(top_k_collaborators("A", idx, g, 1).size() == 1);
    CHECK_THROWS_AS(top_k_collaborators("Z", idx, g), NotFoundError);

    const auto clique = fixture::corpus({{"P1", 2021, {"A", "B", "C", "D", "E"}}});
    CHECK(top_k_collaborators("A", idx, build_coauthor_graph(clique)).empty());
}

TEST_CASE("top_k_collaborators with two-hop exclusion") {
    const auto c = fixture::corpus({{"P1", 2021, {"A", "B"}}, {"P2", 2021, {"B", "C"}}, {"P3", 2021, {"D"}}});
    const auto g = build_coauthor_graph(c);
    Rng rng(5);
    EmbeddingTable t(8);
    for (const auto* id : {"A", "B", "C", "D"}) t.add(id, fixture::unit(rng, 8));
    const auto r = top_k_collaborators("A", SimilarityIndex::build(t), g, 10, 2);
    REQUIRE(r.size() == 1);
    CHECK(r[0].candidate_id == "D");
}

TEST_CASE("top_k_dataset_users") {
    Rng rng(6);
    std::vector<PaperRecord> papers;
    std::vector<AuthorRecord> authors;
    EmbeddingTable t(16);
    for (int i = 0; i < 20; ++i) {
        const std::string id = "A" + std::to_string(10 + i);
        authors.push_back({id, id, "", 0, 0, false});
        t.add(id, fixture::unit(rng, 16));
        papers.push_back({"P" + std::to_string(i), "t", "", 2021, "v", 0, {id}, {}});
    }
    papers[3].dataset_ids = {"D"};
    papers[11].dataset_ids = {"D"};
    const auto c = Corpus::build(papers, authors, {{"D", "d", "", {}}, {"E", "e", "", {}}, {"F", "f", "", {}}}, {});
    EmbeddingTable ds(16);
    ds.add("D", fixture::unit(rng, 16));
    ds.add("E", fixture::unit(rng, 16));
    const auto idx = SimilarityIndex::build(t);

    const auto r = top_k_dataset_users("D", idx, ds, c, 150);
    check_against_scan(r, oracle::scan_top_k(ds.row(0), t, 150, oracle::prior_user_authors(c, "D")));
    CHECK(r.size() == 18);
    const auto plain = top_k_dataset_users("E", idx, ds, c, 5);
    check_against_scan(plain, oracle::scan_top_k(ds.row(1), t, 5, {}));
    CHECK_THROWS_AS(top_k_dataset_users("nope", idx, ds, c), NotFoundError);
    CHECK_THROWS_AS(top_k_dataset_users("F", idx, ds, c), DegenerateError);

    // Every author used it.
    for (auto& p : papers) p.dataset_ids = {"D"};
    const auto all = Corpus::build(papers, authors, {{"D", "d", "", {}}}, {});
    CHECK(top_k_dataset_users("D", idx, ds, all).empty());
}

TEST_CASE("batched queries equal single queries") {
    Rng rng(7);
    std::vector<PaperRecord> papers;
    std::vector<AuthorRecord> authors;
    EmbeddingTable t(24);
    for (int i = 0; i < 120; ++i) {
        const std::string id = "A" + std::to_string(1000 + i);
        authors.push_back({id, id, "", 0, 0, false});
        t.add(id, fixture::unit(rng, 24));
    }
    std::vector<DatasetRecord> datasets;
    EmbeddingTable ds(24);
    for (int d = 0; d < 6; ++d) {
        datasets.push_back({"D" + std::to_string(d), "d", "", {}});
        ds.add(datasets.back().dataset_id, fixture::unit(rng, 24));
    }
    for (int p = 0; p < 200; ++p) {
        PaperRecord r{"P" + std::to_string(p), "t", "", 2021, "v", 0, {}, {}};
        std::set<std::string> team;
        while (team.size() < 1 + uniform_index(rng, 4)) team.insert(authors[uniform_index(rng, authors.size())].author_id);
        r.author_ids.assign(team.begin(), team.end());
        if (uniform01(rng) < 0.3) r.dataset_ids = {datasets[uniform_index(rng, datasets.size())].dataset_id};
        papers.push_back(r);
    }
    const auto c = Corpus::build(papers, authors, datasets, {});
    const auto g = build_coauthor_graph(c);
    const auto idx = SimilarityIndex::build(t);
    std::vector<std::string> ids(t.ids().begin(), t.ids().end());
    const auto batch = batch_top_k_collaborators(ids, idx, g, 30);
    for (std::size_t i = 0; i < ids.size(); ++i) CHECK(batch[i] == top_k_collaborators(ids[i], idx, g, 30));
    std::vector<std::string> dids;
    for (const auto& d : datasets) dids.push_back(d.dataset_id);
    const auto dbatch = batch_top_k_dataset_users(dids, idx, ds, c, 50);
    for (std::size_t i = 0; i < dids.size(); ++i) CHECK(dbatch[i] == top_k_dataset_users(dids[i], idx, ds, c, 50));
}
