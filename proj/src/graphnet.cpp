#include "tkg/graphnet.hpp"

#include <algorithm>
#include <deque>
#include <limits>

#include "tkg/errors.hpp"

namespace tkg {

namespace {
constexpr int kUnreached = std::numeric_limits<int>::max();
}

std::optional<std::uint32_t> CoauthorGraph::find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::uint32_t CoauthorGraph::require(const std::string& id) const {
    auto i = find(id);
    if (!i) throw NotFoundError("author " + id + " is not in the co-authorship network");
    return *i;
}

bool CoauthorGraph::has_edge(std::uint32_t a, std::uint32_t b) const {
    const auto& adj = adjacency_[a];
    return std::binary_search(adj.begin(), adj.end(), b);
}

std::vector<std::string> CoauthorGraph::edge_papers(const std::string& a, const std::string& b) const {
    auto ia = find(a), ib = find(b);
    if (!ia || !ib) return {};
    auto it = edge_papers_.find(key(*ia, *ib));
    if (it == edge_papers_.end()) return {};
    return it->second;
}

std::vector<CoauthorGraph::Edge> CoauthorGraph::edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count_);
    for (std::uint32_t a = 0; a < adjacency_.size(); ++a) {
        for (auto b : adjacency_[a]) {
            if (b <= a) continue;
            out.push_back(Edge{ids_[a], ids_[b], edge_papers_.at(key(a, b))});
        }
    }
    return out;
}

CoauthorGraph CoauthorGraph::from_edges(std::vector<std::string> node_ids, const std::vector<Edge>& edges) {
    CoauthorGraph g;
    std::sort(node_ids.begin(), node_ids.end());
    node_ids.erase(std::unique(node_ids.begin(), node_ids.end()), node_ids.end());
    g.ids_ = std::move(node_ids);
    for (std::uint32_t i = 0; i < g.ids_.size(); ++i) g.index_.emplace(g.ids_[i], i);
    g.adjacency_.resize(g.ids_.size());
    for (const auto& e : edges) {
        const auto a = g.require(e.a);
        const auto b = g.require(e.b);
        if (a == b) continue;
        auto& papers = g.edge_papers_[key(a, b)];
        if (papers.empty()) {
            g.adjacency_[a].push_back(b);
            g.adjacency_[b].push_back(a);
        }
        papers.insert(papers.end(), e.papers.begin(), e.papers.end());
    }
    for (auto& adj : g.adjacency_) std::sort(adj.begin(), adj.end());
    for (auto& [k, papers] : g.edge_papers_) {
        std::sort(papers.begin(), papers.end());
        papers.erase(std::unique(papers.begin(), papers.end()), papers.end());
    }
    g.edge_count_ = g.edge_papers_.size();
    return g;
}

CoauthorGraph build_coauthor_graph(const Corpus& corpus) {
    std::vector<std::string> nodes;
    for (const auto& a : corpus.authors()) {
        if (!a.external) nodes.push_back(a.author_id);
    }
    CoauthorGraph g = CoauthorGraph::from_edges(std::move(nodes), {});
    std::vector<std::uint32_t> members;
    for (const auto& p : corpus.papers()) {
        members.clear();
        for (const auto& a : p.author_ids) {
            if (auto i = g.find(a)) members.push_back(*i);
        }
        for (std::size_t x = 0; x < members.size(); ++x) {
            for (std::size_t y = x + 1; y < members.size(); ++y) {
                auto& papers = g.edge_papers_[CoauthorGraph::key(members[x], members[y])];
                if (papers.empty()) {
                    g.adjacency_[members[x]].push_back(members[y]);
                    g.adjacency_[members[y]].push_back(members[x]);
                }
                papers.push_back(p.paper_id);
            }
        }
    }
    for (auto& adj : g.adjacency_) std::sort(adj.begin(), adj.end());
    for (auto& [k, papers] : g.edge_papers_) std::sort(papers.begin(), papers.end());
    g.edge_count_ = g.edge_papers_.size();
    return g;
}

PathResult shortest_path(const CoauthorGraph& graph, const std::string& from, const std::string& to, int max_depth) {
    const auto src = graph.require(from);
    const auto dst = graph.require(to);
    PathResult result;
    if (src == dst) {
        result.path = std::vector<std::string>{from};
        return result;
    }

    // BFS from the target gives every node its distance to `to`; walking forward from `from` and
    // always stepping to the smallest neighbor one hop closer yields the lexicographically
    // smallest shortest path.
    std::vector<int> dist(graph.node_count(), kUnreached);
    std::deque<std::uint32_t> queue{dst};
    dist[dst] = 0;
    bool capped = false;
    while (!queue.empty()) {
        const auto u = queue.front();
        queue.pop_front();
        if (u == src) break;
        if (max_depth >= 0 && dist[u] >= max_depth) {
            for (auto v : graph.neighbors(u)) capped = capped || dist[v] == kUnreached;
            continue;
        }
        for (auto v : graph.neighbors(u)) {
            if (dist[v] != kUnreached) continue;
            dist[v] = dist[u] + 1;
            queue.push_back(v);
        }
    }
    if (dist[src] == kUnreached) {
        result.beyond_cap = capped;
        return result;
    }

    std::vector<std::string> path{from};
    auto cur = src;
    while (cur != dst) {
        for (auto v : graph.neighbors(cur)) {
            if (dist[v] == dist[cur] - 1) {
                cur = v;
                break;
            }
        }
        path.push_back(graph.ids()[cur]);
    }
    result.path = std::move(path);
    return result;
}

std::vector<std::string> mutual_coauthors(const CoauthorGraph& graph, const std::string& a, const std::string& b) {
    const auto ia = graph.require(a);
    const auto ib = graph.require(b);
    auto na = graph.neighbors(ia);
    auto nb = graph.neighbors(ib);
    std::vector<std::uint32_t> common;
    std::set_intersection(na.begin(), na.end(), nb.begin(), nb.end(), std::back_inserter(common));
    std::vector<std::string> out;
    for (auto c : common) {
        if (c != ia && c != ib) out.push_back(graph.ids()[c]);
    }
    return out;
}

std::vector<std::string> collaborator_set(const CoauthorGraph& graph, const std::string& author_id) {
    std::vector<std::string> out;
    for (auto v : graph.neighbors(graph.require(author_id))) out.push_back(graph.ids()[v]);
    return out;
}

std::vector<std::uint32_t> neighborhood(const CoauthorGraph& graph, std::uint32_t node, int depth) {
    std::vector<std::uint32_t> out;
    if (depth <= 0) return out;
    if (depth == 1) {
        auto n = graph.neighbors(node);
        return {n.begin(), n.end()};
    }
    std::vector<int> dist(graph.node_count(), kUnreached);
    std::deque<std::uint32_t> queue{node};
    dist[node] = 0;
    while (!queue.empty()) {
        const auto u = queue.front();
        queue.pop_front();
        if (dist[u] >= depth) continue;
        for (auto v : graph.neighbors(u)) {
            if (dist[v] != kUnreached) continue;
            dist[v] = dist[u] + 1;
            out.push_back(v);
            queue.push_back(v);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace tkg
