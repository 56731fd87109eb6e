#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tkg/vectors.hpp"

namespace tkg {

struct PaperRecord {
    std::string paper_id;
    std::string title;
    std::string abstract;
    int year = 0;
    std::string venue;
    std::int64_t citation_count = 0;
    std::vector<std::string> author_ids;  // position 1 = first author
    std::vector<std::string> dataset_ids;

    bool operator==(const PaperRecord&) const = default;
};

struct AuthorRecord {
    std::string author_id;
    std::string name;
    std::string affiliation;
    int career_start_year = 0;  // 0 = unknown (author without papers)
    int publication_count = 0;  // derived
    // Removed by filter_authors. External authors stay referenced from papers so author
    // positions are unchanged, but they are not nodes of the served graph.
    bool external = false;

    bool operator==(const AuthorRecord&) const = default;
};

struct DatasetRecord {
    std::string dataset_id;
    std::string name;
    std::string description;
    std::vector<std::string> user_paper_ids;  // derived, sorted

    bool operator==(const DatasetRecord&) const = default;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point2&) const = default;
};

struct BioEntityRecord {
    std::string entity_id;
    std::string name;
    std::optional<EmbeddingVector> embedding;
    std::optional<Point2> position;

    bool operator==(const BioEntityRecord&) const = default;
};

// Immutable after construction. Construction validates every invariant and derives the inverse
// maps (author -> papers, dataset users, publication counts).
class Corpus {
  public:
    Corpus() = default;
    // Throws ValidationError. `career_start_given[i]` tells whether authors[i].career_start_year
    // came from input; when false it is derived from the earliest publication.
    static Corpus build(std::vector<PaperRecord> papers, std::vector<AuthorRecord> authors,
                        std::vector<DatasetRecord> datasets, std::vector<BioEntityRecord> bio_entities,
                        std::vector<bool> career_start_given = {});

    const std::vector<PaperRecord>& papers() const noexcept { return papers_; }
    const std::vector<AuthorRecord>& authors() const noexcept { return authors_; }
    const std::vector<DatasetRecord>& datasets() const noexcept { return datasets_; }
    const std::vector<BioEntityRecord>& bio_entities() const noexcept { return bio_entities_; }

    std::optional<std::size_t> paper_index(const std::string& id) const;
    std::optional<std::size_t> author_index(const std::string& id) const;
    std::optional<std::size_t> dataset_index(const std::string& id) const;
    std::optional<std::size_t> bio_entity_index(const std::string& id) const;

    // Throw NotFoundError.
    const PaperRecord& paper(const std::string& id) const;
    const AuthorRecord& author(const std::string& id) const;
    const DatasetRecord& dataset(const std::string& id) const;

    // Paper indices (into papers()) for an author, in paper order.
    std::span<const std::size_t> papers_of(const std::string& author_id) const;

    std::size_t retained_author_count() const;

    bool operator==(const Corpus& other) const {
        return papers_ == other.papers_ && authors_ == other.authors_ && datasets_ == other.datasets_ &&
               bio_entities_ == other.bio_entities_;
    }

  private:
    friend Corpus derive_inverses(const Corpus& corpus);
    friend Corpus filter_authors(const Corpus& corpus, int min_pubs, int active_since);

    void reindex();
    void derive();

    std::vector<PaperRecord> papers_;
    std::vector<AuthorRecord> authors_;
    std::vector<DatasetRecord> datasets_;
    std::vector<BioEntityRecord> bio_entities_;

    std::unordered_map<std::string, std::size_t> paper_idx_, author_idx_, dataset_idx_, bio_idx_;
    std::vector<std::vector<std::size_t>> author_papers_;
};

// Reads papers.jsonl, authors.jsonl, datasets.jsonl and optional bio_entities.jsonl.
// Throws LoadError (missing file, malformed line with its number) or ValidationError.
Corpus load_corpus(const std::filesystem::path& dir);
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);

// Paper embeddings shipped with a corpus (embeddings.f32 + embeddings.index.jsonl), if present.
std::optional<EmbeddingTable> load_paper_embeddings(const std::filesystem::path& dir);

// Marks authors with fewer than `min_pubs` papers, or none in a year >= `active_since`, as external.
Corpus filter_authors(const Corpus& corpus, int min_pubs = 2, int active_since = 2020);

// Recomputes dataset users and publication counts from the paper records. Idempotent.
Corpus derive_inverses(const Corpus& corpus);

}  // namespace tkg
