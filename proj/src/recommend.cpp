#include "tkg/recommend.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "tkg/errors.hpp"
#include "tkg/util.hpp"

namespace tkg {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;

// Float prefilter error for unit vectors is ~1e-6; anything within this margin of the k-th
// prefilter score is rescored exactly.
constexpr float kPrefilterMargin = 1e-3f;
constexpr std::size_t kQueryBlock = 256;

ConstRowMap matrix_of(const EmbeddingTable& t) {
    return ConstRowMap(t.data().data(), static_cast<Eigen::Index>(t.size()), static_cast<Eigen::Index>(t.dim()));
}

std::vector<float> unit_float(std::span<const float> v) {
    const double n = std::sqrt(dot_exact(v, v));
    if (!(n > 0.0)) throw ContractViolation("query vector is zero");
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] / n);
    return out;
}

}  // namespace

SimilarityIndex SimilarityIndex::build(const EmbeddingTable& table, std::optional<ApproxParams> approx) {
    SimilarityIndex idx;
    idx.table_ = EmbeddingTable(table.dim());
    for (std::size_t r = 0; r < table.size(); ++r) {
        auto v = table.vector(r);
        if (!v.all_finite()) throw ValidationError("non-finite embedding for " + table.id(r));
        idx.table_.add(table.id(r), v.normalized());
    }
    idx.row_norms_.resize(idx.table_.size());
    for (std::size_t r = 0; r < idx.table_.size(); ++r) {
        idx.row_norms_[r] = std::sqrt(dot_exact(idx.table_.row(r), idx.table_.row(r)));
    }
    std::string blob;
    for (const auto& id : idx.table_.ids()) blob += id + '\n';
    blob.append(reinterpret_cast<const char*>(idx.table_.data().data()), idx.table_.data().size() * sizeof(float));
    idx.version_ = sha256_hex(blob).substr(0, 16);

    if (approx && idx.size() > 0) {
        const std::size_t n = idx.size(), d = idx.dim();
        const int lists = approx->n_lists > 0 ? approx->n_lists
                                              : std::max(1, static_cast<int>(std::lround(std::sqrt(double(n)))));
        const auto L = static_cast<std::size_t>(std::min<std::size_t>(lists, n));
        Rng rng(approx->seed);
        std::vector<std::uint32_t> order(n);
        std::iota(order.begin(), order.end(), 0U);
        seeded_shuffle(order, rng);
        RowMatrix C(L, d);
        for (std::size_t c = 0; c < L; ++c) {
            auto row = idx.table_.row(order[c]);
            for (std::size_t j = 0; j < d; ++j) C(c, j) = row[j];
        }
        auto X = matrix_of(idx.table_);
        std::vector<std::uint32_t> assign(n, 0);
        for (int it = 0; it < std::max(1, approx->train_iterations); ++it) {
            for (std::size_t start = 0; start < n; start += 4096) {
                const auto len = std::min<std::size_t>(4096, n - start);
                RowMatrix S = X.middleRows(start, len) * C.transpose();
                for (std::size_t i = 0; i < len; ++i) {
                    Eigen::Index best;
                    S.row(i).maxCoeff(&best);
                    assign[start + i] = static_cast<std::uint32_t>(best);
                }
            }
            RowMatrix next = RowMatrix::Zero(L, d);
            std::vector<std::size_t> counts(L, 0);
            for (std::size_t i = 0; i < n; ++i) {
                next.row(assign[i]) += X.row(i);
                ++counts[assign[i]];
            }
            for (std::size_t c = 0; c < L; ++c) {
                const float nn = next.row(c).norm();
                if (counts[c] == 0 || !(nn > 0.0f)) {
                    next.row(c) = C.row(c);
                } else {
                    next.row(c) /= nn;
                }
            }
            C = std::move(next);
        }
        idx.lists_.assign(L, {});
        for (std::size_t i = 0; i < n; ++i) idx.lists_[assign[i]].push_back(static_cast<std::uint32_t>(i));
        idx.centroids_.assign(C.data(), C.data() + C.size());
        idx.default_probe_ = approx->n_probe > 0 ? approx->n_probe
                                                 : std::max(1, static_cast<int>(std::ceil(static_cast<double>(L) / 5.0)));
    }
    return idx;
}

std::vector<float> SimilarityIndex::approximate_scores(std::span<const float> query) const {
    if (query.size() != dim()) throw ContractViolation("query dimension mismatch");
    const auto q = unit_float(query);
    Eigen::Map<const Eigen::VectorXf> qv(q.data(), static_cast<Eigen::Index>(q.size()));
    Eigen::VectorXf s = matrix_of(table_) * qv;
    return {s.data(), s.data() + s.size()};
}

std::vector<std::uint32_t> SimilarityIndex::probe(std::span<const float> query, int n_probe) const {
    if (lists_.empty()) throw ContractViolation("index was built without an approximate structure");
    const auto L = lists_.size();
    const auto q = unit_float(query);
    Eigen::Map<const Eigen::VectorXf> qv(q.data(), static_cast<Eigen::Index>(q.size()));
    Eigen::Map<const RowMatrix> C(centroids_.data(), static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(dim()));
    Eigen::VectorXf s = C * qv;
    std::vector<std::uint32_t> order(L);
    std::iota(order.begin(), order.end(), 0U);
    const auto probes = std::min<std::size_t>(L, static_cast<std::size_t>(n_probe > 0 ? n_probe : default_probe_));
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(probes), order.end(),
                      [&](std::uint32_t a, std::uint32_t b) { return s[a] != s[b] ? s[a] > s[b] : a < b; });
    std::vector<std::uint32_t> rows;
    for (std::size_t i = 0; i < probes; ++i) rows.insert(rows.end(), lists_[order[i]].begin(), lists_[order[i]].end());
    std::sort(rows.begin(), rows.end());
    return rows;
}

double SimilarityIndex::exact_score(std::span<const float> query, double query_norm, std::size_t row) const {
    return dot_exact(query, table_.row(row)) / (query_norm * row_norms_[row]);
}

std::vector<Recommendation> SimilarityIndex::select(std::span<const float> query, std::span<const float> approx_scores,
                                                    std::span<const char> excluded, int k) const {
    if (k <= 0) throw ContractViolation("k must be positive");
    const double qn = std::sqrt(dot_exact(query, query));
    if (!(qn > 0.0)) throw ContractViolation("query vector is zero");

    std::vector<std::uint32_t> eligible;
    eligible.reserve(size());
    for (std::uint32_t r = 0; r < size(); ++r) {
        if (excluded.empty() || !excluded[r]) eligible.push_back(r);
    }
    const auto K = static_cast<std::size_t>(k);
    std::vector<std::uint32_t> candidates;
    if (eligible.size() <= K) {
        candidates = std::move(eligible);
    } else {
        std::vector<float> vals(eligible.size());
        for (std::size_t i = 0; i < eligible.size(); ++i) vals[i] = approx_scores[eligible[i]];
        std::nth_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(K - 1), vals.end(), std::greater<>());
        const float threshold = vals[K - 1] - kPrefilterMargin;
        for (auto r : eligible) {
            if (approx_scores[r] >= threshold) candidates.push_back(r);
        }
    }

    std::vector<std::pair<double, std::uint32_t>> scored;
    scored.reserve(candidates.size());
    for (auto r : candidates) scored.emplace_back(exact_score(query, qn, r), r);
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return table_.id(a.second) < table_.id(b.second);
    });
    if (scored.size() > K) scored.resize(K);

    std::vector<Recommendation> out;
    out.reserve(scored.size());
    for (std::size_t i = 0; i < scored.size(); ++i) {
        out.push_back(Recommendation{table_.id(scored[i].second), scored[i].first, static_cast<int>(i + 1), true});
    }
    return out;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) throw ContractViolation("cosine: dimension mismatch");
    const double na = a.norm(), nb = b.norm();
    if (!(na > 0.0) || !(nb > 0.0)) throw ContractViolation("cosine: zero vector");
    const double c = dot_exact(a.values(), b.values()) / (na * nb);
    return std::clamp(c, -1.0, 1.0);
}

std::vector<Recommendation> search_by_vector(const EmbeddingVector& query, const SimilarityIndex& index, int k,
                                             const std::unordered_set<std::string>& exclude, SearchMode mode) {
    if (k <= 0) throw ContractViolation("search_by_vector: k must be positive");
    if (query.dim() != index.dim()) throw ContractViolation("search_by_vector: dimension mismatch");
    if (!(query.norm() > 0.0)) throw ContractViolation("search_by_vector: zero query");

    std::vector<char> excluded(index.size(), 0);
    for (const auto& id : exclude) {
        if (auto r = index.find(id)) excluded[*r] = 1;
    }
    if (mode == SearchMode::approximate && index.has_approximate()) {
        // only probed rows are eligible; the rest are treated as excluded
        std::vector<char> outside(index.size(), 1);
        for (auto r : index.probe(query.values())) outside[r] = excluded[r];
        excluded = std::move(outside);
    }
    const auto approx = index.approximate_scores(query.values());
    return index.select(query.values(), approx, excluded, k);
}

namespace {

std::vector<char> collaborator_exclusions(const std::string& author_id, std::size_t self_row,
                                          const SimilarityIndex& index, const CoauthorGraph& graph, int depth) {
    std::vector<char> excluded(index.size(), 0);
    excluded[self_row] = 1;
    if (auto node = graph.find(author_id)) {
        for (auto v : neighborhood(graph, *node, depth)) {
            if (auto r = index.find(graph.ids()[v])) excluded[*r] = 1;
        }
    }
    return excluded;
}

std::vector<char> dataset_exclusions(const DatasetRecord& d, const SimilarityIndex& index, const Corpus& corpus) {
    std::vector<char> excluded(index.size(), 0);
    for (const auto& pid : d.user_paper_ids) {
        for (const auto& a : corpus.paper(pid).author_ids) {
            if (auto r = index.find(a)) excluded[*r] = 1;
        }
    }
    return excluded;
}

std::span<const float> dataset_vector(const std::string& dataset_id, const EmbeddingTable& dataset_embeddings,
                                      const Corpus& corpus) {
    corpus.dataset(dataset_id);  // NotFoundError for unknown ids
    auto row = dataset_embeddings.find(dataset_id);
    if (!row) throw DegenerateError("no usage signal for dataset " + dataset_id);
    return dataset_embeddings.row(*row);
}

// Runs `finish(i, query, approx_scores)` for each query with block-wise float GEMM prefiltering.
template <typename Finish>
void batch_scores(const std::vector<std::span<const float>>& queries, const SimilarityIndex& index, Finish&& finish) {
    const auto d = index.dim();
    auto X = matrix_of(index.table());
    for (std::size_t start = 0; start < queries.size(); start += kQueryBlock) {
        const auto len = std::min(kQueryBlock, queries.size() - start);
        RowMatrix Q(len, d);
        for (std::size_t i = 0; i < len; ++i) {
            const auto q = unit_float(queries[start + i]);
            for (std::size_t j = 0; j < d; ++j) Q(i, j) = q[j];
        }
        RowMatrix S = Q * X.transpose();
        for (std::size_t i = 0; i < len; ++i) {
            finish(start + i, std::span<const float>(S.row(i).data(), index.size()));
        }
    }
}

}  // namespace

std::vector<Recommendation> top_k_collaborators(const std::string& author_id, const SimilarityIndex& author_index,
                                                const CoauthorGraph& graph, int k, int exclusion_depth) {
    auto row = author_index.find(author_id);
    if (!row) throw NotFoundError("author " + author_id + " has no expertise embedding");
    const auto query = author_index.table().row(*row);
    const auto excluded = collaborator_exclusions(author_id, *row, author_index, graph, exclusion_depth);
    return author_index.select(query, author_index.approximate_scores(query), excluded, k);
}

std::vector<Recommendation> top_k_dataset_users(const std::string& dataset_id, const SimilarityIndex& author_index,
                                                const EmbeddingTable& dataset_embeddings, const Corpus& corpus, int k) {
    const auto query = dataset_vector(dataset_id, dataset_embeddings, corpus);
    const auto excluded = dataset_exclusions(corpus.dataset(dataset_id), author_index, corpus);
    return author_index.select(query, author_index.approximate_scores(query), excluded, k);
}

std::vector<std::vector<Recommendation>> batch_top_k_collaborators(const std::vector<std::string>& author_ids,
                                                                   const SimilarityIndex& author_index,
                                                                   const CoauthorGraph& graph, int k,
                                                                   int exclusion_depth) {
    std::vector<std::span<const float>> queries;
    std::vector<std::size_t> rows;
    for (const auto& a : author_ids) {
        auto row = author_index.find(a);
        if (!row) throw NotFoundError("author " + a + " has no expertise embedding");
        rows.push_back(*row);
        queries.push_back(author_index.table().row(*row));
    }
    std::vector<std::vector<Recommendation>> out(author_ids.size());
    batch_scores(queries, author_index, [&](std::size_t i, std::span<const float> approx) {
        const auto excluded = collaborator_exclusions(author_ids[i], rows[i], author_index, graph, exclusion_depth);
        out[i] = author_index.select(queries[i], approx, excluded, k);
    });
    return out;
}

std::vector<std::vector<Recommendation>> batch_top_k_dataset_users(const std::vector<std::string>& dataset_ids,
                                                                   const SimilarityIndex& author_index,
                                                                   const EmbeddingTable& dataset_embeddings,
                                                                   const Corpus& corpus, int k) {
    std::vector<std::span<const float>> queries;
    for (const auto& d : dataset_ids) queries.push_back(dataset_vector(d, dataset_embeddings, corpus));
    std::vector<std::vector<Recommendation>> out(dataset_ids.size());
    batch_scores(queries, author_index, [&](std::size_t i, std::span<const float> approx) {
        const auto excluded = dataset_exclusions(corpus.dataset(dataset_ids[i]), author_index, corpus);
        out[i] = author_index.select(queries[i], approx, excluded, k);
    });
    return out;
}

}  // namespace tkg
