#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "tkg/corpus.hpp"
#include "tkg/embedding.hpp"
#include "tkg/graphnet.hpp"
#include "tkg/llm.hpp"
#include "tkg/recommend.hpp"

namespace tkg {

inline constexpr int kContextSinceYear = 2017;
inline constexpr int kContextPapers = 5;

struct PaperSummary {
    std::string paper_id;
    std::string title;
    std::string venue;
    int year = 0;
    std::int64_t citation_count = 0;

    bool operator==(const PaperSummary&) const = default;
};

struct AuthorContext {
    std::string author_id;
    std::string name;
    std::string affiliation;
    std::vector<PaperSummary> recent_papers;
    std::vector<PaperSummary> cited_papers;  // disjoint from recent_papers
    std::vector<std::string> expertise_areas;
};

// Throws NotFoundError for an unknown author. `facets` (optional) label the expertise areas.
AuthorContext build_author_context(const std::string& author_id, const Corpus& corpus,
                                   std::span<const ExpertiseFacet> facets = {});

struct GapQuery {
    std::string query_text;
    std::string thoughts;

    bool operator==(const GapQuery&) const = default;
};

// Parses a THOUGHTS/QUERY reply. Throws AgentParseError.
GapQuery parse_gap_reply(std::string_view reply);

// Exactly one of `user_need` (nonempty) or `seed_paper` is required; both may be given.
// Throws ContractViolation, LlmTransportError or AgentParseError (after one retry).
GapQuery detect_expertise_gap(const AuthorContext& context, std::string_view user_need, LlmClient& llm,
                              const CompletionParams& params = {}, const PaperRecord* seed_paper = nullptr);

using Embedder = std::function<EmbeddingVector(std::string_view)>;
Embedder make_pseudo_embedder(std::size_t dim, std::uint64_t seed);

// The requesting author and their direct co-authors.
std::unordered_set<std::string> teaming_exclusions(const std::string& author_id, const CoauthorGraph& graph);

std::vector<Recommendation> retrieve_candidates(const GapQuery& gap, const Embedder& embed,
                                                const SimilarityIndex& index,
                                                const std::unordered_set<std::string>& exclude, int pool = 25);

struct RankedCandidate {
    std::string candidate_id;
    std::string name;
    int score = 0;
    std::string justification;
    double retrieval_score = 0.0;
    std::optional<std::vector<std::string>> shortest_path;
    std::vector<std::string> mutual_coauthors;
    std::optional<int> distance;  // |shortest_path| - 1 when a path exists

    bool operator==(const RankedCandidate&) const = default;
};

struct RerankOptions {
    int top_n = 5;
    int parallelism = 4;
    int path_depth_cap = 6;
    CompletionParams params{};
};

struct RerankResult {
    std::vector<RankedCandidate> ranked;
    std::vector<std::string> dropped;  // candidate ids whose scoring failed twice
};

// Parses a SCORE/JUSTIFICATION reply; rejects scores outside [0, 100]. Throws AgentParseError.
std::pair<int, std::string> parse_score_reply(std::string_view reply);

// Scores each pooled candidate, sorts by (score desc, retrieval score desc, id asc), keeps top_n
// and adds the co-authorship path from `requester` (may be empty for anonymous users).
// Throws ContractViolation for an empty pool and PipelineError when every candidate fails.
RerankResult rerank(const GapQuery& gap, std::span<const Recommendation> pool, const std::string& requester,
                    const Corpus& corpus, const CoauthorGraph& graph, LlmClient& llm, const RerankOptions& options = {});

// Keyed store of generated justifications. With an empty path the cache lives in memory only.
class JustificationCache {
  public:
    explicit JustificationCache(const std::filesystem::path& path = {});
    ~JustificationCache();
    JustificationCache(const JustificationCache&) = delete;
    JustificationCache& operator=(const JustificationCache&) = delete;

    std::optional<std::string> get(const std::string& key) const;
    void put(const std::string& key, const std::string& text);
    std::size_t size() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

enum class JustifyKind { collaborator, dataset };

struct JustifyRequest {
    JustifyKind kind = JustifyKind::collaborator;
    std::string subject_id;  // author (collaborator) or dataset id
    std::string candidate_id;
    double similarity = 0.0;
};

std::string justification_cache_key(const JustifyRequest& request, std::string_view model);

// Throws NotFoundError for unknown ids, LlmTransportError, AgentParseError. A mock reply must
// quote a paper title from the supplied context or the dataset name.
std::string justify_recommendation(const JustifyRequest& request, const Corpus& corpus, LlmClient& llm,
                                   JustificationCache* cache = nullptr, const CompletionParams& params = {});

struct ChatMessage {
    std::string role;  // user | agent | error
    std::string text;
    std::int64_t timestamp = 0;

    bool operator==(const ChatMessage&) const = default;
};

struct VoteAudit {
    std::string previous;
    std::string preferred;
    std::int64_t timestamp = 0;

    bool operator==(const VoteAudit&) const = default;
};

struct AbPairing {
    std::size_t turn = 0;  // index of the agent message that delivered the pair
    std::string backbone_a;
    std::string backbone_b;
    std::vector<RankedCandidate> list_a;
    std::vector<RankedCandidate> list_b;
    std::optional<std::string> vote;  // "A" | "B"
    std::int64_t vote_timestamp = 0;
    std::vector<VoteAudit> audit;

    bool operator==(const AbPairing&) const = default;
};

struct ChatSession {
    std::string session_id;
    std::optional<std::string> author_id;
    std::uint64_t seed = 0;
    std::vector<ChatMessage> history;  // append-only
    std::optional<GapQuery> last_gap;
    std::vector<RankedCandidate> last_ranked;
    std::optional<AbPairing> ab;

    bool operator==(const ChatSession&) const = default;
};

nlohmann::json to_json(const RankedCandidate& c);
nlohmann::json session_to_json(const ChatSession& session);
ChatSession session_from_json(const nlohmann::json& j);

using Clock = std::function<std::int64_t()>;  // milliseconds
Clock system_clock_ms();
// Deterministic clock for mock runs: start, start + 1000, start + 2000, ...
Clock logical_clock(std::int64_t start = 1'700'000'000'000);

struct TeamingOptions {
    int pool = 25;
    RerankOptions rerank;
};

struct TeamingDeps {
    const Corpus* corpus = nullptr;
    const CoauthorGraph* graph = nullptr;
    const SimilarityIndex* author_index = nullptr;
    const std::unordered_map<std::string, std::vector<ExpertiseFacet>>* facets = nullptr;
    Embedder embed;
    LlmClient* backbone = nullptr;
    LlmClient* backbone_b = nullptr;  // A/B mode only
    Clock clock;
    TeamingOptions options;
};

struct TeamingRequest {
    std::string message;
    bool ab = false;
    std::optional<std::string> seed_paper_id{};
};

struct TeamingTurn {
    bool ok = false;
    std::optional<GapQuery> gap;
    std::vector<RankedCandidate> ranked;  // primary list; empty in A/B mode
    std::optional<AbPairing> ab;          // labels only, no backbone names are exposed by callers
    std::vector<std::string> dropped;
    std::string error;
};

// Appends the user message and the agent (or error) reply. Never throws for pipeline failures.
TeamingTurn run_teaming_chat(ChatSession& session, const TeamingRequest& request, const TeamingDeps& deps);

// Which backbone gets blind label "A" for a given session turn.
bool ab_first_is_a(const ChatSession& session, std::size_t turn);

// Throws ConflictError without a delivered A/B pair, ContractViolation unless preferred is A or B.
void record_vote(ChatSession& session, const std::string& preferred, std::int64_t timestamp);

// Sessions in a single-file SQLite database (":memory:" for tests).
class SessionStore {
  public:
    explicit SessionStore(const std::filesystem::path& path);
    ~SessionStore();
    SessionStore(const SessionStore&) = delete;
    SessionStore& operator=(const SessionStore&) = delete;

    std::optional<ChatSession> load(const std::string& session_id) const;
    void save(const ChatSession& session);

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace tkg
