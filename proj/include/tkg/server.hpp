#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "tkg/agents.hpp"
#include "tkg/config.hpp"
#include "tkg/layout.hpp"
#include "tkg/llm.hpp"
#include "tkg/pipeline.hpp"

namespace httplib {
class Server;
}

namespace tkg {

struct BBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    bool contains(double x, double y) const { return x >= x_min && x <= x_max && y >= y_min && y <= y_max; }
    bool intersects(const BBox& o) const {
        return !(o.x_min > x_max || o.x_max < x_min || o.y_min > y_max || o.y_max < y_min);
    }
    bool covers(const BBox& o) const {
        return o.x_min >= x_min && o.x_max <= x_max && o.y_min >= y_min && o.y_max <= y_max;
    }
};

// Point quadtree over node views. Nodes are stored in leaf order so each cell owns a contiguous
// range, which makes fully covered cells a single append.
class SpatialIndex {
  public:
    struct Cell {
        BBox box;
        std::uint32_t begin = 0;  // range into order()
        std::uint32_t end = 0;
        std::int32_t children[4] = {-1, -1, -1, -1};
        std::uint32_t representative = 0;  // largest node in the cell (ties: smallest id)
        bool leaf() const { return children[0] < 0; }
        std::uint32_t count() const { return end - begin; }
    };

    SpatialIndex() = default;
    explicit SpatialIndex(const std::vector<NodeView>& nodes, std::size_t leaf_capacity = 32, int max_depth = 20);

    // Node indices inside `box`, in no particular order.
    void query(const BBox& box, std::vector<std::uint32_t>& out) const;

    const std::vector<Cell>& cells() const noexcept { return cells_; }
    const std::vector<std::uint32_t>& order() const noexcept { return order_; }
    const BBox& bounds() const noexcept { return bounds_; }

  private:
    void split(std::int32_t cell, int depth);

    const std::vector<NodeView>* nodes_ = nullptr;
    std::vector<Cell> cells_;
    std::vector<std::uint32_t> order_;
    BBox bounds_;
    std::size_t leaf_capacity_ = 32;
    int max_depth_ = 20;
};

struct ViewportQuery {
    BBox box;
    double zoom = 0.0;
    std::optional<std::set<NodeKind>> kinds;
    std::optional<int> pubs_min, pubs_max;
    std::optional<int> career_min, career_max;
    std::size_t limit = 5000;
};

struct ViewportResult {
    std::vector<std::uint32_t> nodes;  // ordered by (size desc, id asc)
    std::size_t total_matched = 0;
    bool decimated = false;
};

// Keeps largest nodes first, then id order.
bool node_display_before(const NodeView& a, const NodeView& b);

struct ApiResponse {
    ApiResponse() = default;
    ApiResponse(int s, nlohmann::json b) : status(s), body(std::move(b)) {}

    int status = 200;
    nlohmann::json body;
    std::string text;  // pre-serialized body for large node lists; `body` is null then

    std::string dump() const { return text.empty() ? body.dump() : text; }
    nlohmann::json parsed() const { return text.empty() ? body : nlohmann::json::parse(text); }
};

using QueryParams = std::multimap<std::string, std::string>;

struct ServiceOptions {
    Config config;
    std::shared_ptr<LlmClient> backbone;    // may be null: chat endpoints answer 503
    std::shared_ptr<LlmClient> backbone_b;  // A/B mode; may be null
    Clock clock;                            // default: wall clock
    std::filesystem::path state_dir;        // empty: sessions and justifications stay in memory
};

// The HTTP API as plain function calls. Reads go against the immutable snapshot; sessions and
// the justification cache are guarded separately, and chat turns are serialized per session.
class ApiService {
  public:
    ApiService(std::shared_ptr<const Snapshot> snapshot, ServiceOptions options);
    ~ApiService();

    // Dispatches "/api/v1/..." requests. Never throws; errors map to JSON error bodies.
    ApiResponse handle(const std::string& method, const std::string& path, const QueryParams& params,
                       const std::string& body = {});

    ViewportResult query_viewport(const ViewportQuery& q) const;
    // Throws ValidationError for an empty query-independent failure; empty query gives [].
    std::vector<std::uint32_t> search_nodes(const std::string& query, const std::optional<std::set<NodeKind>>& kinds,
                                            std::size_t limit) const;

    nlohmann::json node_payload(const std::string& id) const;
    nlohmann::json node_detail(const std::string& id) const;
    nlohmann::json recommendations(const std::string& id, const std::string& kind, const std::string& why);
    nlohmann::json collaborators(const std::string& id) const;
    nlohmann::json path(const std::string& from, const std::string& to) const;
    nlohmann::json post_message(const std::string& session_id, const nlohmann::json& body);
    nlohmann::json post_feedback(const std::string& session_id, const nlohmann::json& body);
    nlohmann::json session_dump(const std::string& session_id) const;
    nlohmann::json meta() const;
    nlohmann::json health() const;

    const Snapshot& snapshot() const { return *snapshot_; }
    const std::vector<NodeView>& nodes() const { return snapshot_->nodes; }
    std::size_t llm_calls() const;

  private:
    std::string node_name(const std::string& id) const;
    nlohmann::json view_json(std::uint32_t i) const;
    std::mutex& session_mutex(const std::string& session_id);

    std::shared_ptr<const Snapshot> snapshot_;
    ServiceOptions options_;
    SpatialIndex spatial_;
    std::unordered_map<std::string, std::uint32_t> node_index_;
    std::vector<std::string> names_lower_;  // aligned with nodes
    std::vector<std::string> names_;
    std::vector<std::string> view_text_;  // view_json(i).dump(), aligned with nodes

    struct Counting;
    std::shared_ptr<Counting> counting_a_, counting_b_;
    std::unique_ptr<JustificationCache> cache_;
    std::unique_ptr<SessionStore> sessions_;
    mutable std::mutex sessions_mu_;
    std::mutex locks_mu_;
    std::unordered_map<std::string, std::unique_ptr<std::mutex>> session_locks_;
};

// Registers the API routes on an httplib server.
void mount_routes(httplib::Server& server, ApiService& service);

}  // namespace tkg
