#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "tkg/config.hpp"
#include "tkg/corpus.hpp"
#include "tkg/embedding.hpp"
#include "tkg/graphnet.hpp"
#include "tkg/layout.hpp"
#include "tkg/recommend.hpp"

namespace tkg {

inline constexpr const char* kManifestFile = "manifest.json";

struct StageRecord {
    std::string name;
    std::vector<std::pair<std::string, std::string>> files;  // relative path, sha256
    std::string checksum;
    bool valid = false;
    nlohmann::json info;  // stage statistics (counts, trustworthiness, ...)
};

struct BuildManifest {
    std::string input_corpus;
    std::string output_dir;
    std::uint64_t seed = 0;
    nlohmann::json config;
    std::vector<StageRecord> stages;  // dependency order
    bool complete = false;
    std::string snapshot_version;  // derived from the stage checksums

    nlohmann::json to_json() const;
    static BuildManifest from_json(const nlohmann::json& j);
    // name -> checksum, for comparing builds.
    std::vector<std::pair<std::string, std::string>> checksums() const;
};

struct BuildOptions {
    std::filesystem::path corpus_dir;
    std::filesystem::path out_dir;
    Config config;
    bool skip_recs = false;
};

inline const std::vector<std::string>& build_stage_names() {
    static const std::vector<std::string> names = {"corpus", "embeddings", "index", "graph", "layout", "recommendations"};
    return names;
}

// Runs filter -> embeddings -> index -> graph -> layout -> recommendations and writes the
// manifest. On a stage failure the manifest marks that stage and every later one invalid and
// the error is rethrown.
BuildManifest run_build(const BuildOptions& options);

// Everything the server needs, loaded from a build directory. Immutable once loaded.
struct Snapshot {
    BuildManifest manifest;
    Corpus corpus;
    CoauthorGraph graph;
    SimilarityIndex author_index;
    EmbeddingTable dataset_embeddings;
    std::unordered_map<std::string, std::vector<ExpertiseFacet>> facets;
    std::vector<NodeView> nodes;
    std::unordered_map<std::string, std::vector<Recommendation>> collaborator_recs;
    std::unordered_map<std::string, std::vector<Recommendation>> dataset_recs;
    Config config;  // from the manifest's config snapshot
};

// Throws LoadError naming the missing or corrupted file, or an invalid manifest.
Snapshot load_snapshot(const std::filesystem::path& artifact_dir);

// Paper embeddings shipped with the corpus, or pseudo-embeddings of title + abstract.
EmbeddingTable paper_embeddings_for(const Corpus& corpus, const std::filesystem::path& corpus_dir, std::size_t dim,
                                    std::uint64_t embed_seed);

}  // namespace tkg
