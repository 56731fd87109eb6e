#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tkg/corpus.hpp"
#include "tkg/vectors.hpp"

namespace tkg {

struct Rational {
    int num = 0;
    int den = 1;
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    bool operator==(const Rational&) const = default;
};

// Author-order weight: 1 for the first and last author, 1/k for the k-th author up to the 10th,
// 1/10 beyond. The last-author rule wins over the beyond-10th rule.
// Throws ContractViolation unless 1 <= position <= n_authors.
Rational position_weight_exact(int position, int n_authors, bool is_last);
double position_weight(int position, int n_authors, bool is_last);

// normalize(sum_p w_p e_p / sum_p w_p) over the author's embedded papers.
// Throws DegenerateError("no expertise signal") when no paper is embedded and
// DegenerateError("degenerate aggregate") when the weighted mean cancels to zero.
EmbeddingVector author_embedding(const std::string& author_id, const Corpus& corpus,
                                 const EmbeddingTable& paper_embeddings);

// Unweighted normalized mean over papers that used the dataset.
EmbeddingVector dataset_embedding(const std::string& dataset_id, const Corpus& corpus,
                                  const EmbeddingTable& paper_embeddings);

struct ExpertiseFacet {
    EmbeddingVector centroid;
    std::vector<std::string> paper_ids;
    double weight = 0.0;  // member count / embedded paper count
};

struct ExpertiseProfile {
    std::string author_id;
    EmbeddingVector primary_embedding;
    std::vector<ExpertiseFacet> facets;
};

struct ClusterOptions {
    int max_facets = 4;
    std::uint64_t seed = 0;
    // Silhouette a split must beat; k = 1 is kept otherwise.
    double min_silhouette = 0.25;
    int restarts = 4;
    int max_iterations = 50;
};

ExpertiseProfile cluster_expertise(const std::string& author_id, const Corpus& corpus,
                                   const EmbeddingTable& paper_embeddings, const ClusterOptions& options = {});

struct KMeansResult {
    std::vector<int> labels;
    std::vector<EmbeddingVector> centroids;
    double objective = 0.0;  // sum of cosine similarity to assigned centroid
};

// Spherical k-means (cosine) with k-means++ seeding over unit-norm points.
KMeansResult spherical_kmeans(std::span<const EmbeddingVector> points, int k, std::uint64_t seed, int restarts = 4,
                              int max_iterations = 50);

// Mean silhouette under cosine distance (1 - cos). Singleton clusters contribute 0.
double silhouette_cosine(std::span<const EmbeddingVector> points, std::span<const int> labels, int k);

// Deterministic stand-in for a text encoder: hashed unigrams and bigrams (stopwords dropped)
// into `dim` signed buckets, normalized. Text without tokens maps to basis vector 0.
EmbeddingVector pseudo_embed(std::string_view text, std::size_t dim = kDefaultEmbeddingDim, std::uint64_t seed = 0);

}  // namespace tkg
