#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "tkg/layout.hpp"

namespace tkg {

// Operator settings. File format: one `key = value` per line, `#` starts a comment.
struct Config {
    // server
    std::string host = "127.0.0.1";
    int port = 8080;
    int viewport_limit = 5000;
    int viewport_hard_cap = 50000;
    int search_limit = 10;
    std::string state_dir;  // sessions and justification cache; empty: <artifact dir>/state

    // build
    std::uint64_t seed = 0;
    std::uint64_t embed_seed = 0;
    int embed_dim = 768;
    int min_pubs = 2;
    int active_since = 2020;
    int max_facets = 4;
    LayoutMethod layout_method = LayoutMethod::neighbor_embedding;
    int trust_sample = 1000;
    NodeSizeParams node_size;

    // recommendations
    int collab_k = 30;
    int dataset_k = 150;
    int exclusion_depth = 1;

    // agents
    int rerank_pool = 25;
    int rerank_top_n = 5;
    int rerank_parallelism = 4;
    int path_depth_cap = 6;
    int llm_timeout_ms = 30000;
    std::string llm_endpoint_env = "LLM_ENDPOINT";
    std::string llm_api_key_env = "LLM_API_KEY";
    std::string llm_model_a_env = "LLM_MODEL_A";
    std::string llm_model_b_env = "LLM_MODEL_B";

    // Throws ConfigError on unknown keys or bad values.
    void set(const std::string& key, const std::string& value);
    nlohmann::json to_json() const;
};

// Throws ConfigError (unreadable file, syntax error, unknown key, bad value).
Config load_config(const std::filesystem::path& path);

}  // namespace tkg
