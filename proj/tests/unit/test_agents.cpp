#include <atomic>
#include <functional>

#include "doctest.h"
#include "fixtures.hpp"
#include "golden.hpp"
#include "oracles.hpp"
#include "tkg/agents.hpp"
#include "tkg/errors.hpp"
#include "world.hpp"

using namespace tkg;
using fixture::P;

namespace {

// Scripted client: `reply(prompt, call_index)`.
class ScriptedLlm : public LlmClient {
  public:
    using Fn = std::function<std::string(std::string_view, int)>;
    explicit ScriptedLlm(Fn fn, bool mock = false) : fn_(std::move(fn)), mock_(mock) {}
    std::string complete(std::string_view prompt, const CompletionParams&) override { return fn_(prompt, calls++); }
    std::string name() const override { return "scripted"; }
    bool is_mock() const override { return mock_; }
    std::atomic<int> calls{0};

  private:
    Fn fn_;
    bool mock_;
};

class CountingMock : public MockLlmClient {
  public:
    using MockLlmClient::MockLlmClient;
    std::string complete(std::string_view prompt, const CompletionParams& p) override {
        ++calls;
        return MockLlmClient::complete(prompt, p);
    }
    std::atomic<int> calls{0};
};

const fixture::World& world() {
    static const auto w = fixture::golden_world();
    return w;
}

}  // namespace

TEST_CASE("template helpers") {
    CHECK(render_template("a {{x}} b {{y}}{{x}}", {{"x", "1"}, {"y", "2"}}) == "a 1 b 21");
    CHECK_THROWS_AS(render_template("{{missing}}", {}), ContractViolation);
    CHECK_THROWS_AS(render_template("{{open", {{"open", ""}}), ContractViolation);
    const std::string text = "SCORE: 42\nJUSTIFICATION: fine\nPAPERS:\n- one\n- two\n\nTAIL: x\n";
    CHECK(extract_field(text, "SCORE") == "42");
    CHECK(extract_field(text, "NOPE").empty());
    CHECK(extract_block(text, "PAPERS") == "- one\n- two\n");
}

TEST_CASE("build_author_context") {
    SUBCASE("three recent papers are all consumed by the recent list") {
        const auto c = fixture::corpus({{"P1", 2018, {"a"}}, {"P2", 2019, {"a"}}, {"P3", 2020, {"a"}}});
        const auto ctx = build_author_context("a", c);
        CHECK(ctx.recent_papers.size() == 3);
        CHECK(ctx.cited_papers.empty());
        CHECK(ctx.recent_papers[0].paper_id == "P3");
    }
    SUBCASE("twelve papers: independent sort oracle") {
        Rng rng(2);
        std::vector<PaperRecord> papers;
        for (int i = 0; i < 16; ++i) {
            papers.push_back({"P" + std::to_string(10 + i), "Title " + std::to_string(i), "", 2010 + static_cast<int>(uniform_index(rng, 14)),
                              "v", static_cast<std::int64_t>(uniform_index(rng, 5)), {"a"}, {}});
        }
        const auto c = Corpus::build(papers, {{"a", "a", "", 0, 0, false}}, {}, {});
        const auto ctx = build_author_context("a", c);
        std::vector<PaperRecord> since;
        for (const auto& p : papers)
            if (p.year >= 2017) since.push_back(p);
        std::sort(since.begin(), since.end(), [](const auto& x, const auto& y) {
            return x.year != y.year ? x.year > y.year : x.paper_id < y.paper_id;
        });
        std::vector<std::string> recent, cited;
        for (std::size_t i = 0; i < since.size() && i < 5; ++i) recent.push_back(since[i].paper_id);
        std::vector<PaperRecord> rest;
        for (const auto& p : since)
            if (std::find(recent.begin(), recent.end(), p.paper_id) == recent.end()) rest.push_back(p);
        std::sort(rest.begin(), rest.end(), [](const auto& x, const auto& y) {
            return x.citation_count != y.citation_count ? x.citation_count > y.citation_count : x.paper_id < y.paper_id;
        });
        for (std::size_t i = 0; i < rest.size() && i < 5; ++i) cited.push_back(rest[i].paper_id);
        std::vector<std::string> got_recent, got_cited;
        for (const auto& p : ctx.recent_papers) got_recent.push_back(p.paper_id);
        for (const auto& p : ctx.cited_papers) got_cited.push_back(p.paper_id);
        CHECK(got_recent == recent);
        CHECK(got_cited == cited);
    }
    SUBCASE("falls back to all-time papers") {
        const auto c = fixture::corpus({{"P1", 2001, {"a"}, {}, 50}, {"P2", 2005, {"a"}, {}, 1}, {"P3", 2010, {"a"}}});
        const auto ctx = build_author_context("a", c);
        CHECK(ctx.recent_papers.size() == 3);
    }
    CHECK_THROWS_AS(build_author_context("nobody", fixture::corpus({{"P1", 2020, {"a"}}})), NotFoundError);
}

TEST_CASE("detect_expertise_gap") {
    const auto& w = world();
    const auto id = w.connected_authors().front();
    const auto ctx = build_author_context(id, w.corpus);
    MockLlmClient mock;
    const std::string need = "interpretable genotype-phenotype machine learning";
    const auto a = detect_expertise_gap(ctx, need, mock, {.seed = 4});
    const auto b = detect_expertise_gap(ctx, need, mock, {.seed = 4});
    CHECK(a == b);
    CHECK_FALSE(a.thoughts.empty());
    const auto q = to_lower_ascii(a.query_text);
    for (const auto* tok : {"interpretable", "genotype", "phenotype", "machine", "learning"})
        CHECK(q.find(tok) != std::string::npos);

    CHECK_THROWS_AS(detect_expertise_gap(ctx, "   ", mock), ContractViolation);
    const auto& paper = w.corpus.papers()[w.corpus.papers_of(id)[0]];
    const auto seeded = detect_expertise_gap(ctx, "", mock, {}, &paper);
    CHECK(to_lower_ascii(seeded.query_text).find(tokenize(paper.title).front()) != std::string::npos);

    ScriptedLlm flaky([](std::string_view, int call) {
        return call == 0 ? std::string("no envelope") : std::string("THOUGHTS: [Start of Thoughts] x [End of Thoughts]\nQUERY: q\n");
    });
    CHECK(detect_expertise_gap(ctx, need, flaky).query_text == "q");
    CHECK(flaky.calls == 2);

    ScriptedLlm garbage([](std::string_view, int) { return std::string("QUERY: only"); });
    try {
        detect_expertise_gap(ctx, need, garbage);
        FAIL("expected AgentParseError");
    } catch (const AgentParseError& e) {
        CHECK(e.raw() == "QUERY: only");
    }
    CHECK(garbage.calls == 2);

    ScriptedLlm down([](std::string_view, int) -> std::string { throw LlmTransportError("down"); });
    CHECK_THROWS_AS(detect_expertise_gap(ctx, need, down), LlmTransportError);
}

TEST_CASE("retrieve_candidates") {
    const auto& w = world();
    const auto embed = w.embedder();
    const auto id = w.connected_authors().front();
    const auto exclude = teaming_exclusions(id, w.graph);
    CHECK(exclude.count(id));
    for (const auto& n : collaborator_set(w.graph, id)) CHECK(exclude.count(n));

    const GapQuery gap{"regulatory genomics of immune cells", "t"};
    const auto pool = retrieve_candidates(gap, embed, w.index, exclude, 25);
    const auto q = embed(gap.query_text);
    const auto want = oracle::scan_top_k(q.values(), w.author_table, 25, exclude);
    REQUIRE(pool.size() == want.size());
    for (std::size_t i = 0; i < pool.size(); ++i) CHECK(pool[i].candidate_id == want[i].id);

    std::unordered_set<std::string> all(w.author_table.ids().begin(), w.author_table.ids().end());
    CHECK(retrieve_candidates(gap, embed, w.index, all).empty());

    // A candidate whose only signal is the query text itself ranks first.
    EmbeddingTable t(w.dim);
    t.add("match", embed("single cell atlas of the human retina"));
    t.add("other", embed("deep learning for protein structure"));
    const auto r = retrieve_candidates({"single cell atlas of the human retina", "t"}, embed, SimilarityIndex::build(t), {});
    CHECK(r[0].candidate_id == "match");
    CHECK(r[0].score == doctest::Approx(1.0));
}

TEST_CASE("parse_score_reply") {
    CHECK(parse_score_reply("SCORE: 87\nJUSTIFICATION: good") == std::pair<int, std::string>{87, "good"});
    CHECK_THROWS_AS(parse_score_reply("SCORE: 101\nJUSTIFICATION: x"), AgentParseError);
    CHECK_THROWS_AS(parse_score_reply("SCORE: -3\nJUSTIFICATION: x"), AgentParseError);
    CHECK_THROWS_AS(parse_score_reply("SCORE: high\nJUSTIFICATION: x"), AgentParseError);
    CHECK_THROWS_AS(parse_score_reply("SCORE: 50\n"), AgentParseError);
}

TEST_CASE("rerank") {
    const auto& w = world();
    const auto embed = w.embedder();
    const auto id = w.connected_authors().front();
    const GapQuery gap{"statistical methods for clinical cohort outcomes", "t"};
    const auto pool = retrieve_candidates(gap, embed, w.index, teaming_exclusions(id, w.graph), 25);
    REQUIRE(pool.size() == 25);

    MockLlmClient mock;
    const auto r = rerank(gap, pool, id, w.corpus, w.graph, mock, {.top_n = 25});
    REQUIRE(r.ranked.size() == 25);
    CHECK(r.dropped.empty());
    for (std::size_t i = 0; i < r.ranked.size(); ++i) {
        const auto& c = r.ranked[i];
        CHECK(c.candidate_id == pool[i].candidate_id);  // order-preserving mock
        CHECK(c.score >= 0);
        CHECK(c.score <= 100);
        CHECK_FALSE(c.justification.empty());
        const auto path = shortest_path(w.graph, id, c.candidate_id, 6);
        CHECK(c.shortest_path == path.path);
        if (c.shortest_path) CHECK(*c.distance == static_cast<int>(c.shortest_path->size()) - 1);
        else CHECK_FALSE(c.distance);
        CHECK(c.mutual_coauthors == mutual_coauthors(w.graph, id, c.candidate_id));
    }
    CHECK(rerank(gap, pool, id, w.corpus, w.graph, mock).ranked.size() == 5);

    // One candidate's replies always fail; it is dropped, the rest survive.
    const auto victim = w.corpus.author(pool[2].candidate_id).name;
    ScriptedLlm partial([&](std::string_view prompt, int) {
        if (extract_field(prompt, "CANDIDATE") == victim) return std::string("SCORE: 900\nJUSTIFICATION: x");
        return std::string("SCORE: 50\nJUSTIFICATION: fine");
    });
    const auto p = rerank(gap, pool, id, w.corpus, w.graph, partial, {.top_n = 25, .parallelism = 3});
    CHECK(p.dropped == std::vector<std::string>{pool[2].candidate_id});
    CHECK(p.ranked.size() == 24);
    // Equal LLM scores fall back to retrieval order.
    CHECK(p.ranked[0].candidate_id == pool[0].candidate_id);

    ScriptedLlm down([](std::string_view, int) -> std::string { throw LlmTransportError("down"); });
    CHECK_THROWS_AS(rerank(gap, pool, id, w.corpus, w.graph, down), PipelineError);
    CHECK_THROWS_AS(rerank(gap, {}, id, w.corpus, w.graph, mock), ContractViolation);

    // Anonymous requester: no path enrichment.
    const auto anon = rerank(gap, pool, "", w.corpus, w.graph, mock);
    for (const auto& c : anon.ranked) CHECK_FALSE(c.shortest_path);
}

TEST_CASE("justify_recommendation") {
    const auto& w = world();
    const auto authors = w.connected_authors();
    const auto& ds = w.corpus.datasets().front();
    CountingMock mock;
    JustificationCache cache;
    const JustifyRequest dreq{JustifyKind::dataset, ds.dataset_id, authors[3], 0.42};
    const auto text = justify_recommendation(dreq, w.corpus, mock, &cache);
    CHECK(text.find(ds.name) != std::string::npos);
    CHECK(mock.calls == 1);
    CHECK(justify_recommendation(dreq, w.corpus, mock, &cache) == text);
    CHECK(mock.calls == 1);
    CHECK(cache.size() == 1);
    MockLlmClient fresh;
    CHECK(justify_recommendation(dreq, w.corpus, fresh) == text);

    // Collaborator justification quotes a title from either context.
    const JustifyRequest creq{JustifyKind::collaborator, authors[0], authors[5], 0.7};
    const auto ctext = justify_recommendation(creq, w.corpus, mock, &cache);
    std::vector<std::string> titles;
    for (const auto* who : {&authors[0], &authors[5]}) {
        const auto ctx = build_author_context(*who, w.corpus);
        for (const auto& p : ctx.recent_papers) titles.push_back(p.title);
        for (const auto& p : ctx.cited_papers) titles.push_back(p.title);
    }
    CHECK(std::any_of(titles.begin(), titles.end(), [&](const auto& t) { return ctext.find(t) != std::string::npos; }));

    CHECK(justification_cache_key(creq, "m1") != justification_cache_key(creq, "m2"));
    CHECK(justification_cache_key(creq, "m1") != justification_cache_key(dreq, "m1"));

    // A mock reply that cites nothing is rejected; a remote model's is only logged.
    ScriptedLlm ungrounded_mock([](std::string_view, int) { return std::string("JUSTIFICATION: trust me"); }, true);
    CHECK_THROWS_AS(justify_recommendation(creq, w.corpus, ungrounded_mock), AgentParseError);
    ScriptedLlm ungrounded_remote([](std::string_view, int) { return std::string("JUSTIFICATION: trust me"); });
    CHECK(justify_recommendation(creq, w.corpus, ungrounded_remote) == "trust me");
    ScriptedLlm empty([](std::string_view, int) { return std::string("nothing"); });
    CHECK_THROWS_AS(justify_recommendation(creq, w.corpus, empty), AgentParseError);
    CHECK(empty.calls == 2);
    CHECK_THROWS_AS(justify_recommendation({JustifyKind::dataset, "nope", authors[0]}, w.corpus, mock), NotFoundError);
}

TEST_CASE("justification cache persists in SQLite") {
    fixture::TempDir dir;
    {
        JustificationCache c(dir / "cache.sqlite");
        c.put("k", "v");
    }
    JustificationCache c(dir / "cache.sqlite");
    CHECK(c.get("k") == "v");
    CHECK_FALSE(c.get("other"));
}

TEST_CASE("teaming chat transcript is deterministic and matches the golden file") {
    const auto& w = world();
    MockLlmClient a("mock-a", 0), b("mock-b", 5);
    const auto s1 = fixture::golden_session(w, a, b);
    const auto s2 = fixture::golden_session(w, a, b);
    CHECK(s1 == s2);
    const auto text = session_to_json(s1).dump(2) + "\n";
    CHECK(text == session_to_json(s2).dump(2) + "\n");
    const auto g = fixture::check_golden("teaming_session.json", text);
    CHECK_MESSAGE(g.ok, g.message);

    REQUIRE(s1.history.size() == 4);
    CHECK(s1.history[0].role == "user");
    CHECK(s1.history[1].role == "agent");
    CHECK(s1.history[1].text.find("[Start of Thoughts]") == 0);
    REQUIRE(s1.ab);
    CHECK(s1.ab->vote == "B");
    REQUIRE(s1.ab->audit.size() == 1);
    CHECK(s1.ab->audit[0].previous == "A");
    const bool first_is_a = ab_first_is_a(s1, s1.ab->turn);
    CHECK(s1.ab->backbone_a == (first_is_a ? "mock-a" : "mock-b"));
    CHECK(session_from_json(session_to_json(s1)) == s1);
}

TEST_CASE("A/B labels are reproducible per session and vary across sessions") {
    int first = 0;
    for (int i = 0; i < 200; ++i) {
        ChatSession s;
        s.session_id = "s" + std::to_string(i);
        s.seed = 3;
        const bool x = ab_first_is_a(s, 3);
        CHECK(x == ab_first_is_a(s, 3));
        first += x;
    }
    CHECK(first > 60);
    CHECK(first < 140);
}

TEST_CASE("votes and pipeline errors") {
    ChatSession s;
    s.session_id = "x";
    CHECK_THROWS_AS(record_vote(s, "A", 0), ConflictError);
    s.ab = AbPairing{};
    CHECK_THROWS_AS(record_vote(s, "C", 0), ContractViolation);

    const auto& w = world();
    MockLlmClient mock;
    auto deps = w.deps(&mock);
    ChatSession t;
    t.session_id = "err";
    t.author_id = w.connected_authors().front();
    const auto turn = run_teaming_chat(t, {""}, deps);
    CHECK_FALSE(turn.ok);
    REQUIRE(t.history.size() == 2);
    CHECK(t.history[1].role == "error");

    deps.options.pool = 0;
    const auto none = run_teaming_chat(t, {"anything"}, deps);
    CHECK_FALSE(none.ok);
    CHECK(t.history.size() == 4);

    // A/B without a second backbone is an error turn, not an exception.
    deps.options.pool = 25;
    CHECK_FALSE(run_teaming_chat(t, {"anything", true}, deps).ok);
}

TEST_CASE("teaming results never include the requester or co-authors") {
    const auto& w = world();
    MockLlmClient mock("mock", 5);
    auto deps = w.deps(&mock);
    const auto authors = w.connected_authors();
    const std::vector<std::string> needs = {"protein structure prediction", "epidemiology of infectious disease",
                                            "clinical trials statistics", "graph neural networks", "microbiome"};
    Rng rng(12);
    for (int i = 0; i < 40; ++i) {
        ChatSession s;
        s.session_id = "ex" + std::to_string(i);
        s.author_id = authors[uniform_index(rng, authors.size())];
        s.seed = i;
        const auto turn = run_teaming_chat(s, {needs[uniform_index(rng, needs.size())]}, deps);
        REQUIRE(turn.ok);
        const auto ex = teaming_exclusions(*s.author_id, w.graph);
        for (const auto& c : turn.ranked) {
            CHECK_FALSE(ex.count(c.candidate_id));
            if (c.shortest_path) CHECK(*c.distance == static_cast<int>(c.shortest_path->size()) - 1);
        }
    }
}

TEST_CASE("session store") {
    fixture::TempDir dir;
    ChatSession s;
    s.session_id = "abc";
    s.author_id = "A1";
    s.history.push_back({"user", "hello", 5});
    {
        SessionStore store(dir / "sessions.sqlite");
        store.save(s);
        CHECK_FALSE(store.load("zzz"));
    }
    SessionStore store(dir / "sessions.sqlite");
    CHECK(store.load("abc") == s);
    SessionStore mem(":memory:");
    mem.save(s);
    CHECK(mem.load("abc") == s);
}
