#pragma once
// Brute-force reference implementations. Each one is written from the contract alone, as the
// slowest obvious thing that could work, and shares no code with the library beyond data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "tkg/corpus.hpp"
#include "tkg/layout.hpp"
#include "tkg/vectors.hpp"

namespace oracle {

// Weight as a reduced fraction (num, den).
inline std::pair<int, int> position_weight(int k, int /*n*/, bool last) {
    if (k == 1 || last) return {1, 1};
    return {1, k < 10 ? k : 10};
}

inline bool retained(const tkg::Corpus& c, const std::string& author, int min_pubs, int since) {
    int count = 0;
    bool recent = false;
    for (const auto& p : c.papers()) {
        if (std::find(p.author_ids.begin(), p.author_ids.end(), author) == p.author_ids.end()) continue;
        ++count;
        if (p.year >= since) recent = true;
    }
    return count >= min_pubs && recent;
}

inline std::set<std::string> retained_set(const tkg::Corpus& c, int min_pubs = 2, int since = 2020) {
    std::set<std::string> out;
    for (const auto& a : c.authors())
        if (retained(c, a.author_id, min_pubs, since)) out.insert(a.author_id);
    return out;
}

inline std::vector<std::string> dataset_users(const tkg::Corpus& c, const std::string& dataset) {
    std::vector<std::string> out;
    for (const auto& p : c.papers())
        for (const auto& d : p.dataset_ids)
            if (d == dataset) out.push_back(p.paper_id);
    std::sort(out.begin(), out.end());
    return out;
}

inline int publication_count(const tkg::Corpus& c, const std::string& author) {
    int n = 0;
    for (const auto& p : c.papers())
        for (const auto& a : p.author_ids)
            if (a == author) ++n;
    return n;
}

// All authors of papers that used the dataset.
inline std::unordered_set<std::string> prior_user_authors(const tkg::Corpus& c, const std::string& dataset) {
    std::unordered_set<std::string> out;
    for (const auto& p : c.papers()) {
        if (std::find(p.dataset_ids.begin(), p.dataset_ids.end(), dataset) == p.dataset_ids.end()) continue;
        out.insert(p.author_ids.begin(), p.author_ids.end());
    }
    return out;
}

inline double cosine(std::span<const float> a, std::span<const float> b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += double(a[i]) * double(b[i]);
        aa += double(a[i]) * double(a[i]);
        bb += double(b[i]) * double(b[i]);
    }
    return ab / (std::sqrt(aa) * std::sqrt(bb));
}

struct Scored {
    std::string id;
    double score;
};

// Full scan, sorted by (score desc, id asc), truncated to k.
inline std::vector<Scored> scan_top_k(std::span<const float> query, const tkg::EmbeddingTable& table, int k,
                                      const std::unordered_set<std::string>& exclude) {
    std::vector<Scored> all;
    for (std::size_t r = 0; r < table.size(); ++r) {
        if (exclude.count(table.id(r))) continue;
        all.push_back({table.id(r), cosine(query, table.row(r))});
    }
    std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) {
        return a.score != b.score ? a.score > b.score : a.id < b.id;
    });
    if (all.size() > static_cast<std::size_t>(k)) all.resize(k);
    return all;
}

// Undirected adjacency from papers by pairwise scan over retained authors.
inline std::map<std::string, std::set<std::string>> adjacency(const tkg::Corpus& c) {
    std::set<std::string> keep;
    for (const auto& a : c.authors())
        if (!a.external) keep.insert(a.author_id);
    std::map<std::string, std::set<std::string>> adj;
    for (const auto& id : keep) adj[id];
    for (const auto& p : c.papers())
        for (const auto& a : p.author_ids)
            for (const auto& b : p.author_ids)
                if (a != b && keep.count(a) && keep.count(b)) adj[a].insert(b);
    return adj;
}

// Floyd-Warshall hop distances; -1 when unreachable.
inline std::vector<std::vector<int>> all_pairs(std::size_t n, const std::vector<std::pair<int, int>>& edges) {
    const int inf = std::numeric_limits<int>::max() / 4;
    std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
    for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
    for (auto [a, b] : edges) {
        if (a == b) continue;
        d[a][b] = d[b][a] = 1;
    }
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
    for (auto& row : d)
        for (auto& v : row)
            if (v >= inf) v = -1;
    return d;
}

// Lexicographically smallest shortest path, walking the distance table greedily. Node index
// order must equal id order.
inline std::vector<int> smallest_path(const std::vector<std::vector<int>>& d,
                                      const std::vector<std::set<int>>& adj, int from, int to) {
    if (d[from][to] < 0) return {};
    std::vector<int> path{from};
    int cur = from;
    while (cur != to) {
        for (int nb : adj[cur]) {
            if (d[nb][to] == d[cur][to] - 1) {
                cur = nb;
                break;
            }
        }
        path.push_back(cur);
    }
    return path;
}

inline std::vector<int> intersection(const std::set<int>& a, const std::set<int>& b, int x, int y) {
    std::vector<int> out;
    for (int v : a)
        if (b.count(v) && v != x && v != y) out.push_back(v);
    return out;
}

inline double dist(std::span<const float> a, std::span<const float> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (double(a[i]) - b[i]) * (double(a[i]) - b[i]);
    return std::sqrt(s);
}

inline double dist2d(const tkg::Point2& a, const tkg::Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Textbook trustworthiness: 1 - 2/(n k (2n - 3k - 1)) * sum over low-d neighbors that are not
// high-d neighbors of (rank_high - k). Ranks from a full sort per point; assumes no ties.
inline double trustworthiness(const tkg::EmbeddingTable& hi, std::span<const tkg::Point2> lo, int k) {
    const std::size_t n = hi.size();
    double penalty = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> by_hi, by_lo;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) by_hi.push_back(j), by_lo.push_back(j);
        std::sort(by_hi.begin(), by_hi.end(), [&](std::size_t a, std::size_t b) {
            return dist(hi.row(i), hi.row(a)) < dist(hi.row(i), hi.row(b));
        });
        std::sort(by_lo.begin(), by_lo.end(), [&](std::size_t a, std::size_t b) {
            return dist2d(lo[i], lo[a]) < dist2d(lo[i], lo[b]);
        });
        std::vector<std::size_t> rank(n, 0);
        for (std::size_t r = 0; r < by_hi.size(); ++r) rank[by_hi[r]] = r + 1;
        for (int r = 0; r < k; ++r) {
            const auto j = by_lo[r];
            if (rank[j] > static_cast<std::size_t>(k)) penalty += double(rank[j]) - k;
        }
    }
    const double nn = double(n);
    return 1.0 - 2.0 / (nn * k * (2.0 * nn - 3.0 * k - 1.0)) * penalty;
}

// Linear-scan viewport query: matching node indices ordered by (size desc, id asc).
struct ViewportFilter {
    double x0, y0, x1, y1;
    std::optional<std::set<tkg::NodeKind>> kinds;
    std::optional<int> pubs_min, pubs_max, career_min, career_max;
};

inline std::vector<std::uint32_t> viewport(const std::vector<tkg::NodeView>& nodes, const ViewportFilter& f) {
    std::vector<std::uint32_t> out;
    for (std::uint32_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        if (n.x < f.x0 || n.x > f.x1 || n.y < f.y0 || n.y > f.y1) continue;
        if (f.kinds && !f.kinds->count(n.kind)) continue;
        if (f.pubs_min && n.publication_count < *f.pubs_min) continue;
        if (f.pubs_max && n.publication_count > *f.pubs_max) continue;
        if (f.career_min || f.career_max) {
            if (!n.career_start_year) continue;
            if (f.career_min && *n.career_start_year < *f.career_min) continue;
            if (f.career_max && *n.career_start_year > *f.career_max) continue;
        }
        out.push_back(i);
    }
    std::sort(out.begin(), out.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (nodes[a].size != nodes[b].size) return nodes[a].size > nodes[b].size;
        return nodes[a].node_id < nodes[b].node_id;
    });
    return out;
}

}  // namespace oracle
