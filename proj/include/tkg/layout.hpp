#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tkg/corpus.hpp"
#include "tkg/vectors.hpp"

namespace tkg {

enum class LayoutMethod { pca, neighbor_embedding };
std::string_view to_string(LayoutMethod m);
LayoutMethod parse_layout_method(std::string_view s);  // throws ConfigError

/**
 * Parameters of the neighbor-embedding reduction.
 *
 * The optimizer follows the UMAP recipe: exact k-nearest-neighbor graph, smooth kNN distances,
 * fuzzy union symmetrization, then attraction/repulsion SGD with negative sampling on the
 * low-dimensional curve 1 / (1 + a d^(2b)). Inputs wider than `pca_dims` are first projected
 * onto their leading principal components, and the initial layout is the 2D PCA projection.
 */
struct NeighborEmbeddingParams {
    int n_neighbors = 15;
    int n_epochs = 200;
    double min_dist = 0.1;
    double spread = 1.0;
    int negative_sample_rate = 5;
    double learning_rate = 1.0;
    int pca_dims = 50;
};

struct LayoutResult {
    std::vector<std::string> ids;
    std::vector<Point2> coords;
    LayoutMethod method = LayoutMethod::pca;
    std::uint64_t seed = 0;
    double trustworthiness = -1.0;  // < 0 until measured

    std::unordered_map<std::string, Point2> by_id() const;
};

// Throws ContractViolation for fewer than 2 vectors, ValidationError for non-finite input.
LayoutResult reduce_to_2d(const EmbeddingTable& vectors, LayoutMethod method, std::uint64_t seed,
                          const NeighborEmbeddingParams& params = {});

// Top principal-component scores (N x n_components, row-major), double precision. Component
// signs are fixed so the largest-magnitude score of each component is positive.
std::vector<double> pca_scores(const EmbeddingTable& vectors, int n_components);

// Exact Euclidean kNN (self excluded), neighbors sorted by (distance, row).
std::vector<std::vector<std::pair<std::uint32_t, double>>> exact_knn(std::span<const double> points,
                                                                     std::size_t n, std::size_t dim, int k);

// Fits a, b of 1 / (1 + a x^(2b)) to the offset exponential defined by spread and min_dist.
std::pair<double, double> fit_ab(double spread, double min_dist);

// Rank-based trustworthiness in [0, 1]. Rows of `high_d` align with `low_d`. High-dimensional
// distance ties at the k-th neighbor all count as neighbors.
// Throws ContractViolation unless 1 <= k < N and 2N - 3k - 1 > 0.
double trustworthiness(const EmbeddingTable& high_d, std::span<const Point2> low_d, int k);

// Trustworthiness on a seeded subsample of at most `max_points` rows.
double trustworthiness_sampled(const EmbeddingTable& high_d, std::span<const Point2> low_d, int k,
                               std::size_t max_points, std::uint64_t seed);

struct NodeSizeParams {
    double s_min = 2.0;
    double s_scale = 1.5;
};

// s_min + s_scale * ln(1 + count). Throws ContractViolation for negative counts.
double node_size(int publication_count, const NodeSizeParams& params = {});

enum class NodeKind { author, dataset, bio_entity };
std::string_view to_string(NodeKind k);
std::optional<NodeKind> parse_node_kind(std::string_view s);
enum class NodeShape { circle, square };
inline NodeShape shape_of(NodeKind k) { return k == NodeKind::author ? NodeShape::circle : NodeShape::square; }

struct NodeView {
    std::string node_id;
    NodeKind kind = NodeKind::author;
    double x = 0.0;
    double y = 0.0;
    double size = 0.0;
    int publication_count = 0;  // papers for authors, using papers for datasets
    std::optional<int> career_start_year;

    bool operator==(const NodeView&) const = default;
};

struct NodeViewsResult {
    std::vector<NodeView> views;
    std::size_t skipped = 0;  // nodes with neither layout coordinates nor a stored position
};

NodeViewsResult make_node_views(const Corpus& corpus, const LayoutResult& layout, const NodeSizeParams& size = {});

void write_layout_jsonl(const std::vector<NodeView>& views, const std::filesystem::path& path);
std::vector<NodeView> read_layout_jsonl(const std::filesystem::path& path);

}  // namespace tkg
