#include "tkg/layout.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "json.hpp"
#include "tkg/errors.hpp"
#include "tkg/util.hpp"

namespace tkg {

using RowMatrixD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::string_view to_string(LayoutMethod m) { return m == LayoutMethod::pca ? "pca" : "neighbor_embedding"; }

LayoutMethod parse_layout_method(std::string_view s) {
    if (s == "pca") return LayoutMethod::pca;
    if (s == "neighbor_embedding" || s == "umap") return LayoutMethod::neighbor_embedding;
    throw ConfigError("unknown layout method '" + std::string(s) + "' (expected pca or neighbor_embedding)");
}

std::string_view to_string(NodeKind k) {
    switch (k) {
        case NodeKind::author: return "author";
        case NodeKind::dataset: return "dataset";
        case NodeKind::bio_entity: return "bio_entity";
    }
    return "author";
}

std::optional<NodeKind> parse_node_kind(std::string_view s) {
    if (s == "author") return NodeKind::author;
    if (s == "dataset") return NodeKind::dataset;
    if (s == "bio_entity") return NodeKind::bio_entity;
    return std::nullopt;
}

std::unordered_map<std::string, Point2> LayoutResult::by_id() const {
    std::unordered_map<std::string, Point2> out;
    out.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) out.emplace(ids[i], coords[i]);
    return out;
}

std::vector<double> pca_scores(const EmbeddingTable& vectors, int n_components) {
    const auto n = static_cast<Eigen::Index>(vectors.size());
    const auto d = static_cast<Eigen::Index>(vectors.dim());
    const auto c = static_cast<Eigen::Index>(n_components);
    if (c < 1) throw ContractViolation("pca_scores: need at least one component");

    RowMatrixD X(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        auto row = vectors.row(static_cast<std::size_t>(i));
        for (Eigen::Index j = 0; j < d; ++j) X(i, j) = row[static_cast<std::size_t>(j)];
    }
    const Eigen::RowVectorXd mean = X.colwise().mean();
    X.rowwise() -= mean;

    RowMatrixD scores = RowMatrixD::Zero(n, c);
    const Eigen::Index usable = std::min(c, std::min(n, d));
    if (n <= d) {
        // Gram route: Xc Xc^T = U S^2 U^T, scores = U S
        Eigen::MatrixXd G = X * X.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
        for (Eigen::Index k = 0; k < usable; ++k) {
            const Eigen::Index col = n - 1 - k;
            const double s = std::sqrt(std::max(0.0, eig.eigenvalues()(col)));
            scores.col(k) = eig.eigenvectors().col(col) * s;
        }
    } else {
        Eigen::MatrixXd C = X.transpose() * X;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
        for (Eigen::Index k = 0; k < usable; ++k) {
            scores.col(k) = X * eig.eigenvectors().col(d - 1 - k);
        }
    }
    for (Eigen::Index k = 0; k < c; ++k) {
        Eigen::Index arg;
        scores.col(k).cwiseAbs().maxCoeff(&arg);
        if (scores(arg, k) < 0.0) scores.col(k) *= -1.0;
    }
    return {scores.data(), scores.data() + scores.size()};
}

std::vector<std::vector<std::pair<std::uint32_t, double>>> exact_knn(std::span<const double> points, std::size_t n,
                                                                     std::size_t dim, int k) {
    if (k < 1 || static_cast<std::size_t>(k) >= n) throw ContractViolation("exact_knn: need 1 <= k < n");
    Eigen::Map<const RowMatrixD> X(points.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    const Eigen::VectorXd sq = X.rowwise().squaredNorm();
    std::vector<std::vector<std::pair<std::uint32_t, double>>> out(n);
    constexpr std::size_t kBlock = 512;
    std::vector<std::pair<double, std::uint32_t>> row;
    row.reserve(n);
    for (std::size_t start = 0; start < n; start += kBlock) {
        const auto len = std::min(kBlock, n - start);
        RowMatrixD S = X.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len)) * X.transpose();
        for (std::size_t i = 0; i < len; ++i) {
            const std::size_t gi = start + i;
            row.clear();
            for (std::size_t j = 0; j < n; ++j) {
                if (j == gi) continue;
                const double d2 = std::max(0.0, sq[static_cast<Eigen::Index>(gi)] + sq[static_cast<Eigen::Index>(j)] -
                                                    2.0 * S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
                row.emplace_back(d2, static_cast<std::uint32_t>(j));
            }
            std::partial_sort(row.begin(), row.begin() + k, row.end());
            auto& dst = out[gi];
            dst.reserve(static_cast<std::size_t>(k));
            for (int t = 0; t < k; ++t) dst.emplace_back(row[t].second, std::sqrt(row[t].first));
        }
    }
    return out;
}

std::pair<double, double> fit_ab(double spread, double min_dist) {
    // Levenberg-Marquardt least squares on 300 points in [0, 3 * spread].
    constexpr int kPoints = 300;
    std::vector<double> xs(kPoints), ys(kPoints);
    for (int i = 0; i < kPoints; ++i) {
        xs[i] = 3.0 * spread * i / (kPoints - 1);
        ys[i] = xs[i] < min_dist ? 1.0 : std::exp(-(xs[i] - min_dist) / spread);
    }
    auto residuals = [&](double a, double b, std::vector<double>& r) {
        double ss = 0.0;
        for (int i = 0; i < kPoints; ++i) {
            const double f = 1.0 / (1.0 + a * std::pow(xs[i], 2.0 * b));
            r[i] = f - ys[i];
            ss += r[i] * r[i];
        }
        return ss;
    };
    double a = 1.0, b = 1.0, lambda = 1e-3;
    std::vector<double> r(kPoints), r_new(kPoints);
    double cost = residuals(a, b, r);
    for (int iter = 0; iter < 200; ++iter) {
        double jtj00 = 0, jtj01 = 0, jtj11 = 0, jtr0 = 0, jtr1 = 0;
        for (int i = 0; i < kPoints; ++i) {
            const double x = xs[i];
            if (x <= 0.0) continue;
            const double p = std::pow(x, 2.0 * b);
            const double denom = (1.0 + a * p) * (1.0 + a * p);
            const double da = -p / denom;
            const double db = -a * p * 2.0 * std::log(x) / denom;
            jtj00 += da * da;
            jtj01 += da * db;
            jtj11 += db * db;
            jtr0 += da * r[i];
            jtr1 += db * r[i];
        }
        bool improved = false;
        while (lambda < 1e10) {
            const double m00 = jtj00 * (1 + lambda), m11 = jtj11 * (1 + lambda);
            const double det = m00 * m11 - jtj01 * jtj01;
            if (std::abs(det) < 1e-300) break;
            const double step_a = -(m11 * jtr0 - jtj01 * jtr1) / det;
            const double step_b = -(m00 * jtr1 - jtj01 * jtr0) / det;
            const double na = a + step_a, nb = b + step_b;
            if (na > 0 && nb > 0) {
                const double nc = residuals(na, nb, r_new);
                if (nc < cost) {
                    a = na;
                    b = nb;
                    const double rel = (cost - nc) / std::max(cost, 1e-300);
                    cost = nc;
                    r.swap(r_new);
                    lambda = std::max(lambda / 10.0, 1e-12);
                    improved = rel > 1e-14;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if (!improved) break;
    }
    return {a, b};
}

namespace {

struct FuzzyEdge {
    std::uint32_t head;
    std::uint32_t tail;
    double weight;
};

std::vector<FuzzyEdge> fuzzy_graph(const std::vector<std::vector<std::pair<std::uint32_t, double>>>& knn) {
    const std::size_t n = knn.size();
    const double target = std::log2(static_cast<double>(knn.empty() ? 1 : knn[0].size() + 1));
    double mean_all = 0.0;
    std::size_t count_all = 0;
    for (const auto& row : knn) {
        for (const auto& [j, d] : row) {
            mean_all += d;
            ++count_all;
        }
    }
    mean_all /= std::max<std::size_t>(1, count_all);

    std::unordered_map<std::uint64_t, double> directed;
    directed.reserve(n * (knn.empty() ? 1 : knn[0].size()));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = knn[i];
        double rho = 0.0;
        for (const auto& [j, d] : row) {
            if (d > 0.0) {
                rho = d;
                break;
            }
        }
        double lo = 0.0, hi = std::numeric_limits<double>::infinity(), mid = 1.0;
        for (int it = 0; it < 64; ++it) {
            double psum = 0.0;
            for (const auto& [j, d] : row) psum += std::exp(-std::max(0.0, d - rho) / mid);
            if (std::abs(psum - target) < 1e-5) break;
            if (psum > target) {
                hi = mid;
                mid = (lo + hi) / 2.0;
            } else {
                lo = mid;
                mid = std::isinf(hi) ? mid * 2.0 : (lo + hi) / 2.0;
            }
        }
        double mean_i = 0.0;
        for (const auto& [j, d] : row) mean_i += d;
        mean_i /= std::max<std::size_t>(1, row.size());
        const double sigma = std::max(mid, 1e-3 * (rho > 0.0 ? mean_i : mean_all));
        for (const auto& [j, d] : row) {
            const double w = std::exp(-std::max(0.0, d - rho) / std::max(sigma, 1e-300));
            directed[(static_cast<std::uint64_t>(i) << 32) | j] = w;
        }
    }

    std::vector<FuzzyEdge> edges;
    edges.reserve(directed.size() * 2);
    for (const auto& [key, w] : directed) {
        const auto i = static_cast<std::uint32_t>(key >> 32);
        const auto j = static_cast<std::uint32_t>(key & 0xFFFFFFFFu);
        auto rev = directed.find((static_cast<std::uint64_t>(j) << 32) | i);
        const double wt = rev == directed.end() ? 0.0 : rev->second;
        const double sym = w + wt - w * wt;
        edges.push_back({i, j, sym});
        if (rev == directed.end()) edges.push_back({j, i, sym});
    }
    std::sort(edges.begin(), edges.end(), [](const FuzzyEdge& x, const FuzzyEdge& y) {
        return x.head != y.head ? x.head < y.head : x.tail < y.tail;
    });
    return edges;
}

double clip4(double v) { return std::clamp(v, -4.0, 4.0); }

std::vector<Point2> optimize_layout(std::vector<Point2> y, const std::vector<FuzzyEdge>& all_edges,
                                    const NeighborEmbeddingParams& p, Rng& rng) {
    const auto [a, b] = fit_ab(p.spread, p.min_dist);
    const int n_epochs = std::max(1, p.n_epochs);
    double max_w = 0.0;
    for (const auto& e : all_edges) max_w = std::max(max_w, e.weight);
    std::vector<FuzzyEdge> edges;
    for (const auto& e : all_edges) {
        if (e.weight >= max_w / n_epochs) edges.push_back(e);
    }
    const std::size_t m = edges.size();
    std::vector<double> eps(m), eps_neg(m), next(m), next_neg(m);
    for (std::size_t e = 0; e < m; ++e) {
        eps[e] = max_w / edges[e].weight;
        eps_neg[e] = eps[e] / p.negative_sample_rate;
        next[e] = eps[e];
        next_neg[e] = eps_neg[e];
    }
    const std::uint64_t n = y.size();
    for (int epoch = 0; epoch < n_epochs; ++epoch) {
        const double alpha = p.learning_rate * (1.0 - static_cast<double>(epoch) / n_epochs);
        for (std::size_t e = 0; e < m; ++e) {
            if (next[e] > epoch) continue;
            auto& yi = y[edges[e].head];
            auto& yj = y[edges[e].tail];
            double dx = yi.x - yj.x, dy = yi.y - yj.y;
            double d2 = dx * dx + dy * dy;
            if (d2 > 0.0) {
                const double coeff = -2.0 * a * b * std::pow(d2, b - 1.0) / (a * std::pow(d2, b) + 1.0);
                const double gx = clip4(coeff * dx) * alpha, gy = clip4(coeff * dy) * alpha;
                yi.x += gx;
                yi.y += gy;
                yj.x -= gx;
                yj.y -= gy;
            }
            next[e] += eps[e];

            const auto n_neg = static_cast<int>((epoch - next_neg[e]) / eps_neg[e]);
            for (int s = 0; s < n_neg; ++s) {
                const auto k = uniform_index(rng, n);
                if (k == edges[e].head) continue;
                const auto& yk = y[k];
                dx = yi.x - yk.x;
                dy = yi.y - yk.y;
                d2 = dx * dx + dy * dy;
                double gx = 4.0, gy = 4.0;
                if (d2 > 0.0) {
                    const double coeff = 2.0 * b / ((0.001 + d2) * (a * std::pow(d2, b) + 1.0));
                    gx = clip4(coeff * dx);
                    gy = clip4(coeff * dy);
                }
                yi.x += gx * alpha;
                yi.y += gy * alpha;
            }
            next_neg[e] += n_neg * eps_neg[e];
        }
    }
    return y;
}

}  // namespace

LayoutResult reduce_to_2d(const EmbeddingTable& vectors, LayoutMethod method, std::uint64_t seed,
                          const NeighborEmbeddingParams& params) {
    if (vectors.size() < 2) throw ContractViolation("reduce_to_2d: need at least 2 vectors");
    for (float v : vectors.data()) {
        if (!std::isfinite(v)) throw ValidationError("reduce_to_2d: non-finite input value");
    }
    LayoutResult result;
    result.ids = vectors.ids();
    result.method = method;
    result.seed = seed;
    const std::size_t n = vectors.size();

    if (method == LayoutMethod::pca) {
        const auto s = pca_scores(vectors, 2);
        result.coords.resize(n);
        for (std::size_t i = 0; i < n; ++i) result.coords[i] = {s[2 * i], s[2 * i + 1]};
        return result;
    }

    const int dims = static_cast<int>(std::min<std::size_t>(vectors.dim(), static_cast<std::size_t>(params.pca_dims)));
    std::vector<double> reduced;
    std::size_t rdim = 0;
    if (vectors.dim() > static_cast<std::size_t>(params.pca_dims)) {
        reduced = pca_scores(vectors, dims);
        rdim = static_cast<std::size_t>(dims);
    } else {
        reduced.assign(vectors.data().begin(), vectors.data().end());
        rdim = vectors.dim();
    }
    const int k = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(std::max(2, params.n_neighbors)) - 1,
                                                         n - 1));
    const auto knn = exact_knn(reduced, n, rdim, k);
    const auto edges = fuzzy_graph(knn);

    // initial layout: PCA projection scaled into [0, 10] with a tiny seeded jitter
    const auto init = pca_scores(vectors, 2);
    Rng rng(seed);
    std::vector<Point2> y(n);
    double max_abs = 0.0;
    for (double v : init) max_abs = std::max(max_abs, std::abs(v));
    const double expansion = max_abs > 0.0 ? 10.0 / max_abs : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        y[i].x = init[2 * i] * expansion + 1e-4 * standard_normal(rng);
        y[i].y = init[2 * i + 1] * expansion + 1e-4 * standard_normal(rng);
    }
    auto rescale = [&](auto member) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& pt : y) {
            lo = std::min(lo, pt.*member);
            hi = std::max(hi, pt.*member);
        }
        const double span = hi - lo;
        for (auto& pt : y) pt.*member = span > 0.0 ? 10.0 * (pt.*member - lo) / span : 0.0;
    };
    rescale(&Point2::x);
    rescale(&Point2::y);

    result.coords = optimize_layout(std::move(y), edges, params, rng);
    return result;
}

double trustworthiness(const EmbeddingTable& high_d, std::span<const Point2> low_d, int k) {
    const std::size_t n = high_d.size();
    if (low_d.size() != n) throw ContractViolation("trustworthiness: size mismatch");
    if (k < 1 || static_cast<std::size_t>(k) >= n) throw ContractViolation("trustworthiness: need 1 <= k < N");
    const double N = static_cast<double>(n), K = static_cast<double>(k);
    const double denom = N * K * (2.0 * N - 3.0 * K - 1.0);
    if (!(denom > 0.0)) throw ContractViolation("trustworthiness: k too large for N");

    std::vector<double> hd(n);
    std::vector<std::pair<double, std::size_t>> ld;
    std::vector<double> sorted;
    double penalty = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto xi = high_d.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) {
                hd[j] = -1.0;
                continue;
            }
            auto xj = high_d.row(j);
            double s = 0.0;
            for (std::size_t t = 0; t < xi.size(); ++t) {
                const double diff = static_cast<double>(xi[t]) - static_cast<double>(xj[t]);
                s += diff * diff;
            }
            hd[j] = std::sqrt(s);
        }
        sorted.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) sorted.push_back(hd[j]);
        }
        std::sort(sorted.begin(), sorted.end());
        const double kth = sorted[static_cast<std::size_t>(k) - 1];
        const double tie = 1e-12 * (1.0 + kth);

        ld.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double dx = low_d[i].x - low_d[j].x, dy = low_d[i].y - low_d[j].y;
            ld.emplace_back(std::sqrt(dx * dx + dy * dy), j);
        }
        std::partial_sort(ld.begin(), ld.begin() + k, ld.end());
        for (int t = 0; t < k; ++t) {
            const double dj = hd[ld[t].second];
            if (dj <= kth + tie) continue;
            // rank = 1 + number of points strictly closer in the original space
            const auto closer = std::lower_bound(sorted.begin(), sorted.end(), dj - tie) - sorted.begin();
            penalty += static_cast<double>(closer + 1) - K;
        }
    }
    return 1.0 - 2.0 * penalty / denom;
}

double trustworthiness_sampled(const EmbeddingTable& high_d, std::span<const Point2> low_d, int k,
                               std::size_t max_points, std::uint64_t seed) {
    if (high_d.size() <= max_points) return trustworthiness(high_d, low_d, k);
    std::vector<std::size_t> rows(high_d.size());
    std::iota(rows.begin(), rows.end(), 0);
    Rng rng(seed);
    seeded_shuffle(rows, rng);
    rows.resize(max_points);
    std::sort(rows.begin(), rows.end());
    EmbeddingTable sub(high_d.dim());
    std::vector<Point2> pts;
    for (auto r : rows) {
        sub.add(high_d.id(r), high_d.row(r));
        pts.push_back(low_d[r]);
    }
    return trustworthiness(sub, pts, k);
}

double node_size(int publication_count, const NodeSizeParams& params) {
    if (publication_count < 0) throw ContractViolation("node_size: negative publication count");
    return params.s_min + params.s_scale * std::log1p(static_cast<double>(publication_count));
}

NodeViewsResult make_node_views(const Corpus& corpus, const LayoutResult& layout, const NodeSizeParams& size) {
    NodeViewsResult out;
    const auto coords = layout.by_id();
    for (const auto& a : corpus.authors()) {
        if (a.external) continue;
        auto it = coords.find(a.author_id);
        if (it == coords.end()) {
            ++out.skipped;
            continue;
        }
        out.views.push_back(NodeView{a.author_id, NodeKind::author, it->second.x, it->second.y,
                                     node_size(a.publication_count, size), a.publication_count,
                                     a.career_start_year != 0 ? std::optional<int>(a.career_start_year) : std::nullopt});
    }
    for (const auto& d : corpus.datasets()) {
        auto it = coords.find(d.dataset_id);
        if (it == coords.end()) {
            ++out.skipped;
            continue;
        }
        const int users = static_cast<int>(d.user_paper_ids.size());
        out.views.push_back(
            NodeView{d.dataset_id, NodeKind::dataset, it->second.x, it->second.y, node_size(users, size), users, {}});
    }
    for (const auto& b : corpus.bio_entities()) {
        std::optional<Point2> pos = b.position;
        if (!pos) {
            auto it = coords.find(b.entity_id);
            if (it != coords.end()) pos = it->second;
        }
        if (!pos) {
            ++out.skipped;
            continue;
        }
        out.views.push_back(NodeView{b.entity_id, NodeKind::bio_entity, pos->x, pos->y, node_size(0, size), 0, {}});
    }
    return out;
}

void write_layout_jsonl(const std::vector<NodeView>& views, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw LoadError("cannot write " + path.string());
    for (const auto& v : views) {
        nlohmann::json j = {{"node_id", v.node_id}, {"kind", to_string(v.kind)}, {"x", v.x},
                            {"y", v.y},             {"size", v.size},            {"publication_count", v.publication_count}};
        j["career_start_year"] = v.career_start_year ? nlohmann::json(*v.career_start_year) : nlohmann::json(nullptr);
        out << j.dump() << '\n';
    }
}

std::vector<NodeView> read_layout_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    const std::string fname = path.filename().string();
    if (!in) throw LoadError(fname + " not found");
    std::vector<NodeView> views;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            NodeView v;
            v.node_id = j.at("node_id").get<std::string>();
            auto kind = parse_node_kind(j.at("kind").get<std::string>());
            if (!kind) throw LoadError("unknown node kind");
            v.kind = *kind;
            v.x = j.at("x").get<double>();
            v.y = j.at("y").get<double>();
            v.size = j.at("size").get<double>();
            v.publication_count = j.at("publication_count").get<int>();
            if (auto it = j.find("career_start_year"); it != j.end() && !it->is_null()) v.career_start_year = it->get<int>();
            if (!std::isfinite(v.x) || !std::isfinite(v.y) || !(v.size > 0.0)) throw LoadError("bad coordinates or size");
            views.push_back(std::move(v));
        } catch (const std::exception& e) {
            throw LoadError(fname + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return views;
}

}  // namespace tkg
