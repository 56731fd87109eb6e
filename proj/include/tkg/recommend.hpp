#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "tkg/corpus.hpp"
#include "tkg/graphnet.hpp"
#include "tkg/vectors.hpp"

namespace tkg {

struct Recommendation {
    std::string candidate_id;
    double score = 0.0;  // cosine similarity
    int rank = 0;        // 1-based
    bool exclusion_checked = false;

    bool operator==(const Recommendation&) const = default;
};

enum class SearchMode { exact, approximate };

// Inverted-file (IVF) partition used by approximate search.
struct ApproxParams {
    int n_lists = 0;  // 0: round(sqrt(N))
    int n_probe = 0;  // 0: ceil(n_lists / 5)
    int train_iterations = 10;
    std::uint64_t seed = 0;
};

// Immutable snapshot of unit-norm vectors. Rebuilding from the same table gives the same version
// tag and byte-identical rankings.
class SimilarityIndex {
  public:
    SimilarityIndex() = default;
    // Normalizes every row; throws DegenerateError on a zero row.
    static SimilarityIndex build(const EmbeddingTable& table, std::optional<ApproxParams> approx = std::nullopt);

    std::size_t size() const noexcept { return table_.size(); }
    std::size_t dim() const noexcept { return table_.dim(); }
    const EmbeddingTable& table() const noexcept { return table_; }
    const std::string& id(std::size_t row) const { return table_.id(row); }
    std::optional<std::size_t> find(const std::string& id) const { return table_.find(id); }
    const std::string& version() const noexcept { return version_; }
    bool has_approximate() const noexcept { return !lists_.empty(); }
    int n_lists() const noexcept { return static_cast<int>(lists_.size()); }

    // Float scores of every row against `query` (prefilter only; not exact).
    std::vector<float> approximate_scores(std::span<const float> query) const;
    // Rows in the `n_probe` lists closest to the query.
    std::vector<std::uint32_t> probe(std::span<const float> query, int n_probe = 0) const;
    // Cosine in double precision.
    double exact_score(std::span<const float> query, double query_norm, std::size_t row) const;

    // Picks the top k eligible rows: prefilter by approximate scores, then rescore every row that
    // could reach the top k exactly and order by (score desc, id asc).
    std::vector<Recommendation> select(std::span<const float> query, std::span<const float> approx_scores,
                                       std::span<const char> excluded, int k) const;

  private:
    EmbeddingTable table_;
    std::vector<double> row_norms_;
    std::string version_;
    std::vector<float> centroids_;  // n_lists x dim
    std::vector<std::vector<std::uint32_t>> lists_;
    int default_probe_ = 0;
};

// dot(a,b) / (|a| |b|). Throws ContractViolation on a zero vector or dimension mismatch.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

// Top-k by cosine excluding `exclude`. Throws ContractViolation when k <= 0 or the query is zero.
std::vector<Recommendation> search_by_vector(const EmbeddingVector& query, const SimilarityIndex& index, int k,
                                             const std::unordered_set<std::string>& exclude = {},
                                             SearchMode mode = SearchMode::exact);

// Top-k most similar authors that are neither the author nor within `exclusion_depth` hops in
// the co-authorship graph. Throws NotFoundError for an author missing from the index.
std::vector<Recommendation> top_k_collaborators(const std::string& author_id, const SimilarityIndex& author_index,
                                                const CoauthorGraph& graph, int k = 30, int exclusion_depth = 1);

// Top-k authors most similar to the dataset embedding, excluding every author of a paper that
// used the dataset. Throws NotFoundError for an unknown dataset and DegenerateError when the
// dataset has no embedding.
std::vector<Recommendation> top_k_dataset_users(const std::string& dataset_id, const SimilarityIndex& author_index,
                                                const EmbeddingTable& dataset_embeddings, const Corpus& corpus,
                                                int k = 150);

// Batched variants used by the build; results equal the single-query functions.
std::vector<std::vector<Recommendation>> batch_top_k_collaborators(const std::vector<std::string>& author_ids,
                                                                   const SimilarityIndex& author_index,
                                                                   const CoauthorGraph& graph, int k = 30,
                                                                   int exclusion_depth = 1);
std::vector<std::vector<Recommendation>> batch_top_k_dataset_users(const std::vector<std::string>& dataset_ids,
                                                                   const SimilarityIndex& author_index,
                                                                   const EmbeddingTable& dataset_embeddings,
                                                                   const Corpus& corpus, int k = 150);

}  // namespace tkg
