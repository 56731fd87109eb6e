#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tkg/corpus.hpp"

namespace tkg {

// Undirected co-authorship graph over retained (non-external) authors. Node indices follow
// lexicographic id order, so comparing indices compares ids.
class CoauthorGraph {
  public:
    CoauthorGraph() = default;

    // Builds from an explicit edge list; used when loading a persisted graph and by tests.
    // Each edge carries the paper ids backing it. Self-loops are dropped.
    struct Edge {
        std::string a;
        std::string b;
        std::vector<std::string> papers;
    };
    static CoauthorGraph from_edges(std::vector<std::string> node_ids, const std::vector<Edge>& edges);

    std::size_t node_count() const noexcept { return ids_.size(); }
    std::size_t edge_count() const noexcept { return edge_count_; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    std::optional<std::uint32_t> find(const std::string& id) const;
    bool contains(const std::string& id) const { return find(id).has_value(); }
    std::uint32_t require(const std::string& id) const;  // throws NotFoundError

    std::span<const std::uint32_t> neighbors(std::uint32_t node) const { return adjacency_[node]; }
    bool has_edge(std::uint32_t a, std::uint32_t b) const;
    // Shared paper ids for an edge, sorted; empty if the edge does not exist.
    std::vector<std::string> edge_papers(const std::string& a, const std::string& b) const;

    // Edges as (a, b, papers) with a < b, sorted. Deterministic serialization order.
    std::vector<Edge> edges() const;

  private:
    friend CoauthorGraph build_coauthor_graph(const Corpus& corpus);

    static std::uint64_t key(std::uint32_t a, std::uint32_t b) {
        if (a > b) std::swap(a, b);
        return (static_cast<std::uint64_t>(a) << 32) | b;
    }

    std::vector<std::string> ids_;
    std::unordered_map<std::string, std::uint32_t> index_;
    std::vector<std::vector<std::uint32_t>> adjacency_;  // sorted, no self-loops
    std::unordered_map<std::uint64_t, std::vector<std::string>> edge_papers_;
    std::size_t edge_count_ = 0;
};

CoauthorGraph build_coauthor_graph(const Corpus& corpus);

struct PathResult {
    std::optional<std::vector<std::string>> path;  // inclusive of both endpoints
    bool beyond_cap = false;                       // a path may exist but is longer than the cap

    std::optional<int> distance() const {
        if (!path) return std::nullopt;
        return static_cast<int>(path->size()) - 1;
    }
};

// Minimum-hop path; among equal-length paths the lexicographically smallest id sequence.
// `max_depth` < 0 means unbounded. Throws NotFoundError for unknown ids.
PathResult shortest_path(const CoauthorGraph& graph, const std::string& from, const std::string& to,
                         int max_depth = -1);

// neighbors(a) ∩ neighbors(b) minus {a, b}, sorted by id.
std::vector<std::string> mutual_coauthors(const CoauthorGraph& graph, const std::string& a, const std::string& b);

// Direct neighbors, sorted by id.
std::vector<std::string> collaborator_set(const CoauthorGraph& graph, const std::string& author_id);

// All nodes within `depth` hops of the author, excluding the author. depth 1 = collaborator_set.
std::vector<std::uint32_t> neighborhood(const CoauthorGraph& graph, std::uint32_t node, int depth);

}  // namespace tkg
