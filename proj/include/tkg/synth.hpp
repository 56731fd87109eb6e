#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "tkg/corpus.hpp"
#include "tkg/vectors.hpp"

namespace tkg {

// Synthetic corpus with planted topics. Authors are split into a core group, guaranteed to pass
// the default retention filter (two or more papers, one from 2020 on), and a peripheral group
// that each appear on exactly one paper and are filtered out.
struct SynthOptions {
    int authors = 100;
    int papers = 0;    // 0: 2 * authors
    int datasets = 0;  // 0: max(1, authors / 25)
    int bio_entities = 0;
    int topics = 0;  // 0: clamp(authors / 250, 4, 40)
    double external_fraction = 0.2;
    std::uint64_t seed = 0;
    std::size_t dim = kDefaultEmbeddingDim;
    std::uint64_t embed_seed = 0;  // pseudo-embedder seed for bio entity and paper embeddings
    bool write_paper_embeddings = false;
};

struct SyntheticCorpus {
    Corpus corpus;
    std::vector<int> author_topic;   // aligned with corpus.authors()
    std::vector<int> paper_topic;    // aligned with corpus.papers()
    std::vector<int> dataset_topic;  // aligned with corpus.datasets()
    std::optional<EmbeddingTable> paper_embeddings;
};

// Throws ContractViolation for non-positive sizes.
SyntheticCorpus generate_synthetic(const SynthOptions& options);

// papers/authors/datasets/bio_entities.jsonl (+ embeddings.f32 when generated).
void write_synthetic(const SyntheticCorpus& synth, const std::filesystem::path& dir);

}  // namespace tkg
