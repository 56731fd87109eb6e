#include "tkg/agents.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <future>
#include <map>

#include <spdlog/spdlog.h>

#include "tkg/errors.hpp"
#include "tkg/prompts.hpp"
#include "tkg/util.hpp"

namespace tkg {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

// Titles are quoted in prompts, so embedded quotes and newlines would break the envelope.
std::string prompt_safe(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c == '"') c = '\'';
        if (c == '\n' || c == '\r') c = ' ';
    }
    return out;
}

PaperSummary summarize(const PaperRecord& p) {
    return {p.paper_id, prompt_safe(p.title), p.venue, p.year, p.citation_count};
}

std::string paper_lines(const std::vector<PaperSummary>& papers) {
    if (papers.empty()) return "(none)";
    std::string out;
    for (const auto& p : papers) {
        if (!out.empty()) out.push_back('\n');
        out += "- \"" + p.title + "\" (" + (p.venue.empty() ? "unknown venue" : prompt_safe(p.venue)) + ", " +
               std::to_string(p.year) + "; " + std::to_string(p.citation_count) + " citations)";
    }
    return out;
}

std::vector<PaperSummary> all_context_papers(const AuthorContext& c) {
    auto out = c.recent_papers;
    out.insert(out.end(), c.cited_papers.begin(), c.cited_papers.end());
    return out;
}

std::string area_label(const std::vector<std::string>& titles) {
    std::map<std::string, int> freq;
    for (const auto& t : titles) {
        for (auto& w : tokenize(t)) {
            if (!is_stopword(w) && w.size() > 2) ++freq[w];
        }
    }
    std::vector<std::pair<std::string, int>> items(freq.begin(), freq.end());
    std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::string label;
    for (std::size_t i = 0; i < std::min<std::size_t>(3, items.size()); ++i) {
        if (i) label += ", ";
        label += items[i].first;
    }
    return label;
}

std::string format_similarity(double s) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", s);
    return buf;
}

AuthorContext anonymous_context() {
    AuthorContext c;
    c.name = "Anonymous researcher";
    c.affiliation = "unknown";
    return c;
}

}  // namespace

AuthorContext build_author_context(const std::string& author_id, const Corpus& corpus,
                                   std::span<const ExpertiseFacet> facets) {
    const auto& author = corpus.author(author_id);
    AuthorContext ctx;
    ctx.author_id = author.author_id;
    ctx.name = prompt_safe(author.name);
    ctx.affiliation = prompt_safe(author.affiliation);

    std::vector<const PaperRecord*> pool;
    for (auto idx : corpus.papers_of(author_id)) {
        const auto& p = corpus.papers()[idx];
        if (p.year >= kContextSinceYear) pool.push_back(&p);
    }
    if (pool.empty()) {
        for (auto idx : corpus.papers_of(author_id)) pool.push_back(&corpus.papers()[idx]);
    }

    std::sort(pool.begin(), pool.end(), [](const PaperRecord* a, const PaperRecord* b) {
        if (a->year != b->year) return a->year > b->year;
        return a->paper_id < b->paper_id;
    });
    const std::size_t n_recent = std::min<std::size_t>(kContextPapers, pool.size());
    for (std::size_t i = 0; i < n_recent; ++i) ctx.recent_papers.push_back(summarize(*pool[i]));

    std::vector<const PaperRecord*> rest(pool.begin() + static_cast<std::ptrdiff_t>(n_recent), pool.end());
    std::sort(rest.begin(), rest.end(), [](const PaperRecord* a, const PaperRecord* b) {
        if (a->citation_count != b->citation_count) return a->citation_count > b->citation_count;
        return a->paper_id < b->paper_id;
    });
    for (std::size_t i = 0; i < std::min<std::size_t>(kContextPapers, rest.size()); ++i) {
        ctx.cited_papers.push_back(summarize(*rest[i]));
    }

    if (!facets.empty()) {
        for (const auto& f : facets) {
            std::vector<std::string> titles;
            for (const auto& pid : f.paper_ids) titles.push_back(corpus.paper(pid).title);
            auto label = area_label(titles);
            if (!label.empty()) ctx.expertise_areas.push_back(std::move(label));
        }
    } else {
        std::vector<std::string> titles;
        for (auto idx : corpus.papers_of(author_id)) titles.push_back(corpus.papers()[idx].title);
        auto label = area_label(titles);
        if (!label.empty()) ctx.expertise_areas.push_back(std::move(label));
    }
    return ctx;
}

GapQuery parse_gap_reply(std::string_view reply) {
    static constexpr std::string_view kStart = "[Start of Thoughts]";
    static constexpr std::string_view kEnd = "[End of Thoughts]";
    const auto a = reply.find(kStart);
    const auto b = a == std::string_view::npos ? a : reply.find(kEnd, a + kStart.size());
    if (a == std::string_view::npos || b == std::string_view::npos) {
        throw AgentParseError("agent parse failure: missing delimited thoughts", std::string(reply));
    }
    GapQuery gap;
    gap.thoughts = trim(reply.substr(a + kStart.size(), b - a - kStart.size()));
    gap.query_text = extract_field(reply.substr(b + kEnd.size()), "QUERY");
    if (gap.query_text.empty()) gap.query_text = extract_field(reply, "QUERY");
    if (gap.query_text.empty()) throw AgentParseError("agent parse failure: empty QUERY", std::string(reply));
    if (gap.thoughts.empty()) throw AgentParseError("agent parse failure: empty thoughts", std::string(reply));
    return gap;
}

GapQuery detect_expertise_gap(const AuthorContext& context, std::string_view user_need, LlmClient& llm,
                              const CompletionParams& params, const PaperRecord* seed_paper) {
    const std::string need = prompt_safe(trim(user_need));
    if (need.empty() && seed_paper == nullptr) {
        throw ContractViolation("a teaming need or a seed paper is required");
    }
    std::string areas;
    for (const auto& a : context.expertise_areas) areas += (areas.empty() ? "- " : "\n- ") + a;
    if (areas.empty()) areas = "(none)";
    std::string seed_line;
    if (seed_paper) seed_line = "\"" + prompt_safe(seed_paper->title) + "\" (" + std::to_string(seed_paper->year) + ")";

    const std::string prompt = render_template(prompts::kGapDetectV1, {{"author_name", context.name},
                                                                        {"affiliation", context.affiliation},
                                                                        {"expertise_areas", areas},
                                                                        {"recent_papers", paper_lines(context.recent_papers)},
                                                                        {"cited_papers", paper_lines(context.cited_papers)},
                                                                        {"seed_paper", seed_line},
                                                                        {"user_need", need}});
    for (int attempt = 0;; ++attempt) {
        const std::string reply = llm.complete(prompt, params);
        try {
            return parse_gap_reply(reply);
        } catch (const AgentParseError&) {
            if (attempt >= 1) throw;
            spdlog::warn("gap detection reply did not parse, retrying");
        }
    }
}

Embedder make_pseudo_embedder(std::size_t dim, std::uint64_t seed) {
    return [dim, seed](std::string_view text) { return pseudo_embed(text, dim, seed); };
}

std::unordered_set<std::string> teaming_exclusions(const std::string& author_id, const CoauthorGraph& graph) {
    std::unordered_set<std::string> out{author_id};
    if (graph.contains(author_id)) {
        for (auto& id : collaborator_set(graph, author_id)) out.insert(std::move(id));
    }
    return out;
}

std::vector<Recommendation> retrieve_candidates(const GapQuery& gap, const Embedder& embed,
                                                const SimilarityIndex& index,
                                                const std::unordered_set<std::string>& exclude, int pool) {
    if (gap.query_text.empty()) throw ContractViolation("gap query is empty");
    return search_by_vector(embed(gap.query_text), index, pool, exclude);
}

std::pair<int, std::string> parse_score_reply(std::string_view reply) {
    const std::string score_text = extract_field(reply, "SCORE");
    int score = -1;
    const auto* end = score_text.data() + score_text.size();
    auto [ptr, ec] = std::from_chars(score_text.data(), end, score);
    if (score_text.empty() || ec != std::errc() || ptr != end) {
        throw AgentParseError("agent parse failure: SCORE is not an integer", std::string(reply));
    }
    if (score < 0 || score > 100) {
        throw AgentParseError("agent parse failure: SCORE out of range", std::string(reply));
    }
    std::string just = extract_field(reply, "JUSTIFICATION");
    if (just.empty()) throw AgentParseError("agent parse failure: empty JUSTIFICATION", std::string(reply));
    return {score, std::move(just)};
}

RerankResult rerank(const GapQuery& gap, std::span<const Recommendation> pool, const std::string& requester,
                    const Corpus& corpus, const CoauthorGraph& graph, LlmClient& llm, const RerankOptions& options) {
    if (pool.empty()) throw ContractViolation("rerank pool is empty");

    std::vector<std::string> prompts_by_candidate;
    std::vector<std::string> names;
    prompts_by_candidate.reserve(pool.size());
    for (const auto& rec : pool) {
        const auto ctx = build_author_context(rec.candidate_id, corpus);
        names.push_back(corpus.author(rec.candidate_id).name);
        prompts_by_candidate.push_back(render_template(prompts::kRerankV1,
                                                       {{"query", prompt_safe(gap.query_text)},
                                                        {"thoughts", prompt_safe(gap.thoughts)},
                                                        {"candidate_name", ctx.name},
                                                        {"candidate_affiliation", ctx.affiliation},
                                                        {"similarity", format_similarity(rec.score)},
                                                        {"candidate_papers", paper_lines(all_context_papers(ctx))}}));
    }

    using Scored = std::optional<std::pair<int, std::string>>;
    auto score_one = [&](std::size_t i) -> Scored {
        for (int attempt = 0; attempt < 2; ++attempt) {
            try {
                return parse_score_reply(llm.complete(prompts_by_candidate[i], options.params));
            } catch (const AgentParseError& e) {
                spdlog::warn("rerank reply for {} rejected: {}", pool[i].candidate_id, e.what());
            } catch (const LlmTransportError& e) {
                spdlog::warn("rerank call for {} failed: {}", pool[i].candidate_id, e.what());
            }
        }
        return std::nullopt;
    };

    std::vector<Scored> scored(pool.size());
    const std::size_t width = static_cast<std::size_t>(std::max(1, options.parallelism));
    for (std::size_t start = 0; start < pool.size(); start += width) {
        const std::size_t stop = std::min(pool.size(), start + width);
        if (width == 1) {
            scored[start] = score_one(start);
            continue;
        }
        std::vector<std::future<Scored>> futures;
        for (std::size_t i = start; i < stop; ++i) futures.push_back(std::async(std::launch::async, score_one, i));
        for (std::size_t i = start; i < stop; ++i) scored[i] = futures[i - start].get();
    }

    RerankResult result;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (!scored[i]) {
            result.dropped.push_back(pool[i].candidate_id);
            continue;
        }
        RankedCandidate c;
        c.candidate_id = pool[i].candidate_id;
        c.name = names[i];
        c.score = scored[i]->first;
        c.justification = std::move(scored[i]->second);
        c.retrieval_score = pool[i].score;
        result.ranked.push_back(std::move(c));
    }
    if (result.ranked.empty()) throw PipelineError("every rerank call failed");

    std::sort(result.ranked.begin(), result.ranked.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.retrieval_score != b.retrieval_score) return a.retrieval_score > b.retrieval_score;
        return a.candidate_id < b.candidate_id;
    });
    if (result.ranked.size() > static_cast<std::size_t>(std::max(0, options.top_n))) {
        result.ranked.resize(static_cast<std::size_t>(std::max(0, options.top_n)));
    }

    if (!requester.empty() && graph.contains(requester)) {
        for (auto& c : result.ranked) {
            if (!graph.contains(c.candidate_id)) continue;
            auto path = shortest_path(graph, requester, c.candidate_id, options.path_depth_cap);
            c.distance = path.distance();
            c.shortest_path = std::move(path.path);
            c.mutual_coauthors = mutual_coauthors(graph, requester, c.candidate_id);
        }
    }
    return result;
}

std::string justification_cache_key(const JustifyRequest& request, std::string_view model) {
    const auto tmpl = request.kind == JustifyKind::collaborator ? prompts::kJustifyCollabV1 : prompts::kJustifyDatasetV1;
    const std::string version = sha256_hex(tmpl).substr(0, 12);
    return std::string(request.kind == JustifyKind::collaborator ? "collab" : "dataset") + "|" + request.subject_id +
           "|" + request.candidate_id + "|" + version + "|" + std::string(model);
}

std::string justify_recommendation(const JustifyRequest& request, const Corpus& corpus, LlmClient& llm,
                                   JustificationCache* cache, const CompletionParams& params) {
    const std::string key = justification_cache_key(request, llm.name());
    if (cache) {
        if (auto hit = cache->get(key)) return *hit;
    }

    const auto cand = build_author_context(request.candidate_id, corpus);
    std::vector<std::string> anchors;
    for (const auto& p : all_context_papers(cand)) anchors.push_back(p.title);

    std::string prompt;
    if (request.kind == JustifyKind::collaborator) {
        const auto subj = build_author_context(request.subject_id, corpus);
        for (const auto& p : all_context_papers(subj)) anchors.push_back(p.title);
        prompt = render_template(prompts::kJustifyCollabV1,
                                 {{"author_name", subj.name},
                                  {"affiliation", subj.affiliation},
                                  {"author_papers", paper_lines(all_context_papers(subj))},
                                  {"candidate_name", cand.name},
                                  {"candidate_affiliation", cand.affiliation},
                                  {"candidate_papers", paper_lines(all_context_papers(cand))},
                                  {"similarity", format_similarity(request.similarity)}});
    } else {
        const auto& ds = corpus.dataset(request.subject_id);
        anchors.push_back(prompt_safe(ds.name));
        prompt = render_template(prompts::kJustifyDatasetV1,
                                 {{"dataset_name", prompt_safe(ds.name)},
                                  {"dataset_description", prompt_safe(ds.description)},
                                  {"candidate_name", cand.name},
                                  {"candidate_affiliation", cand.affiliation},
                                  {"candidate_papers", paper_lines(all_context_papers(cand))},
                                  {"similarity", format_similarity(request.similarity)}});
    }

    std::string text;
    for (int attempt = 0;; ++attempt) {
        const std::string reply = llm.complete(prompt, params);
        text = extract_field(reply, "JUSTIFICATION");
        if (!text.empty()) break;
        if (attempt >= 1) throw AgentParseError("agent parse failure: empty JUSTIFICATION", reply);
    }

    const bool grounded = std::any_of(anchors.begin(), anchors.end(), [&](const std::string& a) {
        return !a.empty() && text.find(a) != std::string::npos;
    });
    if (!grounded) {
        if (llm.is_mock()) throw AgentParseError("mock justification cites no title or dataset name", text);
        spdlog::warn("justification for {} / {} cites no context title", request.subject_id, request.candidate_id);
    }
    if (cache) cache->put(key, text);
    return text;
}

// ---- chat ----

Clock system_clock_ms() {
    return [] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
            .count();
    };
}

Clock logical_clock(std::int64_t start) {
    auto next = std::make_shared<std::atomic<std::int64_t>>(start);
    return [next] { return next->fetch_add(1000); };
}

bool ab_first_is_a(const ChatSession& session, std::size_t turn) {
    Rng rng(fnv1a64(session.session_id, session.seed) ^ (0x9e3779b97f4a7c15ULL * (turn + 1)));
    return uniform01(rng) < 0.5;
}

namespace {

void append_list(std::string& out, const std::vector<RankedCandidate>& list) {
    int i = 0;
    for (const auto& c : list) {
        out += std::to_string(++i) + ". " + c.name + " (Score: " + std::to_string(c.score) + ")";
        if (c.distance) out += "; co-authorship distance: " + std::to_string(*c.distance);
        if (!c.mutual_coauthors.empty()) out += "; mutual co-authors: " + std::to_string(c.mutual_coauthors.size());
        out += "\n   " + c.justification + "\n";
    }
}

std::string agent_reply_text(const GapQuery& gap, const TeamingTurn& turn) {
    std::string out = "[Start of Thoughts] " + gap.thoughts + " [End of Thoughts]\n";
    out += "Proposed search query: " + gap.query_text + "\n";
    if (turn.ab) {
        out += "Model A:\n";
        append_list(out, turn.ab->list_a);
        out += "Model B:\n";
        append_list(out, turn.ab->list_b);
        out += "Which list fits your need better? Vote A or B.\n";
    } else {
        out += "Recommended collaborators:\n";
        append_list(out, turn.ranked);
    }
    return out;
}

}  // namespace

TeamingTurn run_teaming_chat(ChatSession& session, const TeamingRequest& request, const TeamingDeps& deps) {
    const Clock clock = deps.clock ? deps.clock : system_clock_ms();
    session.history.push_back({"user", request.message, clock()});
    TeamingTurn turn;
    try {
        if (!deps.corpus || !deps.graph || !deps.author_index || !deps.backbone || !deps.embed) {
            throw ContractViolation("teaming dependencies are incomplete");
        }
        const Corpus& corpus = *deps.corpus;
        AuthorContext ctx = anonymous_context();
        std::string requester;
        if (session.author_id) {
            requester = *session.author_id;
            std::span<const ExpertiseFacet> facets;
            if (deps.facets) {
                if (auto it = deps.facets->find(requester); it != deps.facets->end()) facets = it->second;
            }
            ctx = build_author_context(requester, corpus, facets);
        }
        const PaperRecord* seed_paper = nullptr;
        if (request.seed_paper_id) seed_paper = &corpus.paper(*request.seed_paper_id);

        RerankOptions ropts = deps.options.rerank;
        ropts.params.seed = session.seed;
        const GapQuery gap = detect_expertise_gap(ctx, request.message, *deps.backbone, ropts.params, seed_paper);
        turn.gap = gap;

        std::unordered_set<std::string> exclude;
        if (!requester.empty()) exclude = teaming_exclusions(requester, *deps.graph);
        const auto pool = retrieve_candidates(gap, deps.embed, *deps.author_index, exclude, deps.options.pool);
        if (pool.empty()) throw PipelineError("no eligible candidates");

        auto first = rerank(gap, pool, requester, corpus, *deps.graph, *deps.backbone, ropts);
        turn.dropped = first.dropped;
        if (request.ab) {
            if (!deps.backbone_b) throw ConfigError("A/B mode needs a second backbone");
            auto second = rerank(gap, pool, requester, corpus, *deps.graph, *deps.backbone_b, ropts);
            turn.dropped.insert(turn.dropped.end(), second.dropped.begin(), second.dropped.end());
            AbPairing pair;
            pair.turn = session.history.size();
            if (ab_first_is_a(session, pair.turn)) {
                pair.backbone_a = deps.backbone->name();
                pair.backbone_b = deps.backbone_b->name();
                pair.list_a = std::move(first.ranked);
                pair.list_b = std::move(second.ranked);
            } else {
                pair.backbone_a = deps.backbone_b->name();
                pair.backbone_b = deps.backbone->name();
                pair.list_a = std::move(second.ranked);
                pair.list_b = std::move(first.ranked);
            }
            turn.ab = pair;
        } else {
            turn.ranked = std::move(first.ranked);
        }

        session.history.push_back({"agent", agent_reply_text(gap, turn), clock()});
        session.last_gap = gap;
        if (turn.ab) {
            session.ab = turn.ab;
            session.last_ranked.clear();
        } else {
            session.last_ranked = turn.ranked;
        }
        turn.ok = true;
    } catch (const std::exception& e) {
        turn = TeamingTurn{};
        turn.error = e.what();
        session.history.push_back({"error", e.what(), clock()});
    }
    return turn;
}

void record_vote(ChatSession& session, const std::string& preferred, std::int64_t timestamp) {
    if (!session.ab) throw ConflictError("no A/B comparison is pending in this session");
    if (preferred != "A" && preferred != "B") throw ContractViolation("preferred must be A or B");
    auto& ab = *session.ab;
    if (ab.vote) ab.audit.push_back({*ab.vote, preferred, timestamp});
    ab.vote = preferred;
    ab.vote_timestamp = timestamp;
}

// ---- JSON ----

namespace {

using nlohmann::json;

RankedCandidate candidate_from_json(const json& j) {
    RankedCandidate c;
    c.candidate_id = j.at("candidate_id").get<std::string>();
    c.name = j.at("name").get<std::string>();
    c.score = j.at("score").get<int>();
    c.justification = j.at("justification").get<std::string>();
    c.retrieval_score = j.at("retrieval_score").get<double>();
    if (!j.at("shortest_path").is_null()) c.shortest_path = j.at("shortest_path").get<std::vector<std::string>>();
    c.mutual_coauthors = j.at("mutual_coauthors").get<std::vector<std::string>>();
    if (!j.at("distance").is_null()) c.distance = j.at("distance").get<int>();
    return c;
}

json list_json(const std::vector<RankedCandidate>& list) {
    json arr = json::array();
    for (const auto& c : list) arr.push_back(to_json(c));
    return arr;
}

std::vector<RankedCandidate> list_from_json(const json& j) {
    std::vector<RankedCandidate> out;
    for (const auto& c : j) out.push_back(candidate_from_json(c));
    return out;
}

}  // namespace

nlohmann::json to_json(const RankedCandidate& c) {
    json j = {{"candidate_id", c.candidate_id},
              {"name", c.name},
              {"score", c.score},
              {"justification", c.justification},
              {"retrieval_score", c.retrieval_score},
              {"shortest_path", nullptr},
              {"mutual_coauthors", c.mutual_coauthors},
              {"distance", nullptr}};
    if (c.shortest_path) j["shortest_path"] = *c.shortest_path;
    if (c.distance) j["distance"] = *c.distance;
    return j;
}

nlohmann::json session_to_json(const ChatSession& s) {
    json history = json::array();
    for (const auto& m : s.history) history.push_back({{"role", m.role}, {"text", m.text}, {"timestamp", m.timestamp}});
    json j = {{"session_id", s.session_id},
              {"author_id", s.author_id ? json(*s.author_id) : json(nullptr)},
              {"seed", s.seed},
              {"history", history},
              {"last_gap", nullptr},
              {"last_ranked", list_json(s.last_ranked)},
              {"ab", nullptr}};
    if (s.last_gap) j["last_gap"] = {{"query_text", s.last_gap->query_text}, {"thoughts", s.last_gap->thoughts}};
    if (s.ab) {
        json audit = json::array();
        for (const auto& a : s.ab->audit) {
            audit.push_back({{"previous", a.previous}, {"preferred", a.preferred}, {"timestamp", a.timestamp}});
        }
        j["ab"] = {{"turn", s.ab->turn},
                   {"backbone_a", s.ab->backbone_a},
                   {"backbone_b", s.ab->backbone_b},
                   {"list_a", list_json(s.ab->list_a)},
                   {"list_b", list_json(s.ab->list_b)},
                   {"vote", s.ab->vote ? json(*s.ab->vote) : json(nullptr)},
                   {"vote_timestamp", s.ab->vote_timestamp},
                   {"audit", audit}};
    }
    return j;
}

ChatSession session_from_json(const nlohmann::json& j) {
    ChatSession s;
    s.session_id = j.at("session_id").get<std::string>();
    if (!j.at("author_id").is_null()) s.author_id = j.at("author_id").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& m : j.at("history")) {
        s.history.push_back({m.at("role").get<std::string>(), m.at("text").get<std::string>(),
                             m.at("timestamp").get<std::int64_t>()});
    }
    if (!j.at("last_gap").is_null()) {
        s.last_gap = GapQuery{j["last_gap"].at("query_text").get<std::string>(),
                              j["last_gap"].at("thoughts").get<std::string>()};
    }
    s.last_ranked = list_from_json(j.at("last_ranked"));
    if (!j.at("ab").is_null()) {
        const auto& a = j["ab"];
        AbPairing p;
        p.turn = a.at("turn").get<std::size_t>();
        p.backbone_a = a.at("backbone_a").get<std::string>();
        p.backbone_b = a.at("backbone_b").get<std::string>();
        p.list_a = list_from_json(a.at("list_a"));
        p.list_b = list_from_json(a.at("list_b"));
        if (!a.at("vote").is_null()) p.vote = a.at("vote").get<std::string>();
        p.vote_timestamp = a.at("vote_timestamp").get<std::int64_t>();
        for (const auto& e : a.at("audit")) {
            p.audit.push_back({e.at("previous").get<std::string>(), e.at("preferred").get<std::string>(),
                               e.at("timestamp").get<std::int64_t>()});
        }
        s.ab = std::move(p);
    }
    return s;
}

}  // namespace tkg
