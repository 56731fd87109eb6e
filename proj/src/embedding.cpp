#include "tkg/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tkg/errors.hpp"
#include "tkg/util.hpp"

namespace tkg {

Rational position_weight_exact(int position, int n_authors, bool is_last) {
    if (n_authors < 1 || position < 1 || position > n_authors) {
        throw ContractViolation("position_weight: position " + std::to_string(position) + " outside [1, " +
                                std::to_string(n_authors) + "]");
    }
    if (position == 1 || is_last) return {1, 1};
    if (position <= 10) return {1, position};
    return {1, 10};
}

double position_weight(int position, int n_authors, bool is_last) {
    return position_weight_exact(position, n_authors, is_last).value();
}

namespace {

EmbeddingVector finish_mean(std::vector<double>& acc, double total_weight) {
    std::vector<float> out(acc.size());
    double norm2 = 0.0;
    for (std::size_t i = 0; i < acc.size(); ++i) {
        acc[i] /= total_weight;
        norm2 += acc[i] * acc[i];
    }
    const double n = std::sqrt(norm2);
    if (!(n > 1e-12)) throw DegenerateError("degenerate aggregate: weighted mean is the zero vector");
    for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i] / n);
    return EmbeddingVector(std::move(out));
}

}  // namespace

EmbeddingVector author_embedding(const std::string& author_id, const Corpus& corpus,
                                 const EmbeddingTable& paper_embeddings) {
    std::vector<double> acc(paper_embeddings.dim(), 0.0);
    double total = 0.0;
    for (auto pi : corpus.papers_of(author_id)) {
        const auto& p = corpus.papers()[pi];
        auto row = paper_embeddings.find(p.paper_id);
        if (!row) continue;
        const auto pos = std::find(p.author_ids.begin(), p.author_ids.end(), author_id) - p.author_ids.begin() + 1;
        const int n = static_cast<int>(p.author_ids.size());
        const double w = position_weight(static_cast<int>(pos), n, pos == n);
        auto e = paper_embeddings.row(*row);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * e[i];
        total += w;
    }
    if (total == 0.0) throw DegenerateError("no expertise signal for author " + author_id);
    return finish_mean(acc, total);
}

EmbeddingVector dataset_embedding(const std::string& dataset_id, const Corpus& corpus,
                                  const EmbeddingTable& paper_embeddings) {
    const auto& d = corpus.dataset(dataset_id);
    std::vector<double> acc(paper_embeddings.dim(), 0.0);
    double count = 0.0;
    for (const auto& pid : d.user_paper_ids) {
        auto row = paper_embeddings.find(pid);
        if (!row) continue;
        auto e = paper_embeddings.row(*row);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += e[i];
        count += 1.0;
    }
    if (count == 0.0) throw DegenerateError("no usage signal for dataset " + dataset_id);
    return finish_mean(acc, count);
}

namespace {

double cosine_unit(const EmbeddingVector& a, const EmbeddingVector& b) { return dot_exact(a.values(), b.values()); }

EmbeddingVector mean_direction(std::span<const EmbeddingVector> points, std::span<const int> labels, int cluster,
                               const EmbeddingVector& fallback) {
    std::vector<double> acc(fallback.dim(), 0.0);
    bool any = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (labels[i] != cluster) continue;
        any = true;
        auto v = points[i].values();
        for (std::size_t d = 0; d < acc.size(); ++d) acc[d] += v[d];
    }
    if (!any) return fallback;
    double n2 = 0.0;
    for (double x : acc) n2 += x * x;
    if (!(n2 > 1e-24)) return fallback;
    const double n = std::sqrt(n2);
    std::vector<float> out(acc.size());
    for (std::size_t d = 0; d < acc.size(); ++d) out[d] = static_cast<float>(acc[d] / n);
    return EmbeddingVector(std::move(out));
}

KMeansResult kmeans_once(std::span<const EmbeddingVector> points, int k, Rng& rng, int max_iterations) {
    const std::size_t n = points.size();
    // k-means++ on cosine distance
    std::vector<std::size_t> centers{static_cast<std::size_t>(uniform_index(rng, n))};
    std::vector<double> closest(n, std::numeric_limits<double>::infinity());
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = std::max(0.0, 1.0 - cosine_unit(points[i], points[centers.back()]));
            closest[i] = std::min(closest[i], d);
            total += closest[i];
        }
        std::size_t pick = 0;
        if (total <= 0.0) {
            // all remaining points coincide with a center; take the first non-center
            while (std::find(centers.begin(), centers.end(), pick) != centers.end()) ++pick;
        } else {
            double r = uniform01(rng) * total;
            for (pick = 0; pick + 1 < n; ++pick) {
                r -= closest[pick];
                if (r < 0.0) break;
            }
        }
        centers.push_back(pick);
    }

    KMeansResult res;
    for (auto c : centers) res.centroids.push_back(points[c]);
    res.labels.assign(n, -1);
    for (int iter = 0; iter < max_iterations; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_sim = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double s = cosine_unit(points[i], res.centroids[c]);
                if (s > best_sim) {
                    best_sim = s;
                    best = c;
                }
            }
            if (res.labels[i] != best) {
                res.labels[i] = best;
                changed = true;
            }
        }
        // reseed empty clusters with the point least similar to its centroid
        for (int c = 0; c < k; ++c) {
            if (std::find(res.labels.begin(), res.labels.end(), c) != res.labels.end()) continue;
            std::size_t worst = 0;
            double worst_sim = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i) {
                const auto members = std::count(res.labels.begin(), res.labels.end(), res.labels[i]);
                if (members < 2) continue;
                const double s = cosine_unit(points[i], res.centroids[res.labels[i]]);
                if (s < worst_sim) {
                    worst_sim = s;
                    worst = i;
                }
            }
            res.labels[worst] = c;
            changed = true;
        }
        for (int c = 0; c < k; ++c) res.centroids[c] = mean_direction(points, res.labels, c, res.centroids[c]);
        if (!changed) break;
    }
    res.objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) res.objective += cosine_unit(points[i], res.centroids[res.labels[i]]);
    return res;
}

}  // namespace

KMeansResult spherical_kmeans(std::span<const EmbeddingVector> points, int k, std::uint64_t seed, int restarts,
                              int max_iterations) {
    if (k < 1 || static_cast<std::size_t>(k) > points.size()) {
        throw ContractViolation("spherical_kmeans: k must be in [1, n]");
    }
    Rng rng(seed);
    KMeansResult best;
    for (int r = 0; r < std::max(1, restarts); ++r) {
        auto res = kmeans_once(points, k, rng, max_iterations);
        if (r == 0 || res.objective > best.objective + 1e-12) best = std::move(res);
    }
    return best;
}

double silhouette_cosine(std::span<const EmbeddingVector> points, std::span<const int> labels, int k) {
    const std::size_t n = points.size();
    if (n == 0) return 0.0;
    std::vector<std::size_t> sizes(k, 0);
    for (int l : labels) ++sizes[l];
    double total = 0.0;
    std::vector<double> sum_to(k);
    for (std::size_t i = 0; i < n; ++i) {
        if (sizes[labels[i]] < 2) continue;
        std::fill(sum_to.begin(), sum_to.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            sum_to[labels[j]] += std::max(0.0, 1.0 - cosine_unit(points[i], points[j]));
        }
        const double a = sum_to[labels[i]] / static_cast<double>(sizes[labels[i]] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            if (c == labels[i] || sizes[c] == 0) continue;
            b = std::min(b, sum_to[c] / static_cast<double>(sizes[c]));
        }
        if (!std::isfinite(b)) continue;
        const double m = std::max(a, b);
        if (m > 0.0) total += (b - a) / m;
    }
    return total / static_cast<double>(n);
}

ExpertiseProfile cluster_expertise(const std::string& author_id, const Corpus& corpus,
                                   const EmbeddingTable& paper_embeddings, const ClusterOptions& options) {
    ExpertiseProfile profile;
    profile.author_id = author_id;
    profile.primary_embedding = author_embedding(author_id, corpus, paper_embeddings);

    std::vector<std::string> ids;
    std::vector<EmbeddingVector> points;
    for (auto pi : corpus.papers_of(author_id)) {
        const auto& p = corpus.papers()[pi];
        auto row = paper_embeddings.find(p.paper_id);
        if (!row) continue;
        auto v = paper_embeddings.vector(*row);
        if (!(v.norm() > 1e-12)) continue;
        ids.push_back(p.paper_id);
        points.push_back(v.normalized());
    }
    const int n = static_cast<int>(points.size());

    std::vector<int> labels(n, 0);
    int best_k = 1;
    if (n >= 4) {
        double best_score = options.min_silhouette;
        const std::uint64_t seed = options.seed ^ fnv1a64(author_id);
        for (int k = 2; k <= std::min(options.max_facets, n); ++k) {
            auto res = spherical_kmeans(points, k, seed + static_cast<std::uint64_t>(k), options.restarts,
                                        options.max_iterations);
            const double s = silhouette_cosine(points, res.labels, k);
            if (s > best_score) {
                best_score = s;
                best_k = k;
                labels = res.labels;
            }
        }
    }

    for (int c = 0; c < best_k; ++c) {
        ExpertiseFacet f;
        for (int i = 0; i < n; ++i) {
            if (labels[i] == c) f.paper_ids.push_back(ids[i]);
        }
        if (f.paper_ids.empty()) continue;
        const auto first = static_cast<std::size_t>(std::find(labels.begin(), labels.end(), c) - labels.begin());
        f.centroid = mean_direction(points, labels, c, points[first]);
        f.weight = static_cast<double>(f.paper_ids.size()) / static_cast<double>(n);
        profile.facets.push_back(std::move(f));
    }
    std::stable_sort(profile.facets.begin(), profile.facets.end(), [](const auto& a, const auto& b) {
        if (a.paper_ids.size() != b.paper_ids.size()) return a.paper_ids.size() > b.paper_ids.size();
        return a.paper_ids.front() < b.paper_ids.front();
    });
    return profile;
}

EmbeddingVector pseudo_embed(std::string_view text, std::size_t dim, std::uint64_t seed) {
    if (dim == 0) throw ContractViolation("pseudo_embed: dim must be positive");
    std::vector<std::string> tokens;
    for (auto& t : tokenize(text)) {
        if (!is_stopword(t)) tokens.push_back(std::move(t));
    }
    std::vector<double> acc(dim, 0.0);
    auto add = [&](std::string_view feature, double w) {
        const std::uint64_t h = fnv1a64(feature, seed);
        const double sign = ((h >> 40) & 1U) ? -1.0 : 1.0;
        acc[h % dim] += sign * w;
    };
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        add(tokens[i], 1.0);
        if (i + 1 < tokens.size()) add(tokens[i] + ' ' + tokens[i + 1], 0.5);
    }
    double n2 = 0.0;
    for (double x : acc) n2 += x * x;
    if (!(n2 > 0.0)) return EmbeddingVector::basis(dim, 0);
    const double n = std::sqrt(n2);
    std::vector<float> out(dim);
    for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(acc[i] / n);
    return EmbeddingVector(std::move(out));
}

}  // namespace tkg
