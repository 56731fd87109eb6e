#pragma once
// Small builders shared by the unit tests and the acceptance runner.

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <initializer_list>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "tkg/corpus.hpp"
#include "tkg/util.hpp"
#include "tkg/vectors.hpp"

namespace fixture {

namespace fs = std::filesystem;

class TempDir {
  public:
    explicit TempDir(const std::string& tag = "tkg") {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& rel) const { return path_ / rel; }

  private:
    fs::path path_;
};

struct P {
    std::string id;
    int year;
    std::vector<std::string> authors;
    std::vector<std::string> datasets = {};
    std::int64_t citations = 0;
    std::string title = {};
};

// Authors are collected from the papers (plus `extra` authors without papers).
inline tkg::Corpus corpus(std::initializer_list<P> papers, std::vector<std::string> datasets = {},
                          std::vector<std::string> extra = {}) {
    std::vector<tkg::PaperRecord> ps;
    std::set<std::string> author_ids(extra.begin(), extra.end());
    for (const auto& p : papers) {
        tkg::PaperRecord r;
        r.paper_id = p.id;
        r.title = p.title.empty() ? "Paper " + p.id : p.title;
        r.year = p.year;
        r.venue = "Venue";
        r.citation_count = p.citations;
        r.author_ids = p.authors;
        r.dataset_ids = p.datasets;
        author_ids.insert(p.authors.begin(), p.authors.end());
        ps.push_back(r);
    }
    std::vector<tkg::AuthorRecord> as;
    for (const auto& id : author_ids) as.push_back({id, "Name " + id, "Inst", 0, 0, false});
    std::vector<tkg::DatasetRecord> ds;
    for (const auto& id : datasets) ds.push_back({id, "Dataset " + id, "about " + id, {}});
    return tkg::Corpus::build(std::move(ps), std::move(as), std::move(ds), {});
}

inline std::vector<float> gaussian(tkg::Rng& rng, std::size_t dim, double scale = 1.0) {
    std::vector<float> v(dim);
    for (auto& x : v) x = static_cast<float>(scale * tkg::standard_normal(rng));
    return v;
}

inline std::vector<float> unit(tkg::Rng& rng, std::size_t dim) {
    auto v = gaussian(rng, dim);
    double n = 0;
    for (float x : v) n += double(x) * x;
    n = std::sqrt(n);
    for (auto& x : v) x = static_cast<float>(x / n);
    return v;
}

inline tkg::EmbeddingTable random_table(tkg::Rng& rng, std::size_t rows, std::size_t dim,
                                        const std::string& prefix = "V") {
    tkg::EmbeddingTable t(dim);
    for (std::size_t r = 0; r < rows; ++r) {
        std::string id = std::to_string(r);
        id = prefix + std::string(6 - std::min<std::size_t>(6, id.size()), '0') + id;
        t.add(id, unit(rng, dim));
    }
    return t;
}

// Three isotropic Gaussian blobs with well-separated random centers.
inline tkg::EmbeddingTable gaussian_clusters(std::uint64_t seed, int per_cluster, std::size_t dim,
                                             std::vector<int>* labels = nullptr, double spread = 1.0,
                                             double separation = 10.0) {
    tkg::Rng rng(seed);
    tkg::EmbeddingTable t(dim);
    for (int c = 0; c < 3; ++c) {
        const auto center = gaussian(rng, dim, separation / std::sqrt(double(dim)) * 3.0);
        for (int i = 0; i < per_cluster; ++i) {
            auto v = gaussian(rng, dim, spread / std::sqrt(double(dim)) * 3.0);
            for (std::size_t d = 0; d < dim; ++d) v[d] += center[d];
            t.add("c" + std::to_string(c) + "_" + std::to_string(1000 + i), v);
            if (labels) labels->push_back(c);
        }
    }
    return t;
}

}  // namespace fixture
