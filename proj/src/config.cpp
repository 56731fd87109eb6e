#include "tkg/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>

#include "tkg/errors.hpp"

namespace tkg {

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const auto* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (value.empty() || ec != std::errc() || ptr != end) throw ConfigError("bad value for " + key + ": " + value);
    return out;
}

int parse_positive(const std::string& key, const std::string& value) {
    const int v = parse_number<int>(key, value);
    if (v <= 0) throw ConfigError(key + " must be positive");
    return v;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

void Config::set(const std::string& key, const std::string& value) {
    using Setter = std::function<void(Config&, const std::string&)>;
    static const std::map<std::string, Setter> setters = {
        {"host", [](Config& c, const std::string& v) { c.host = v; }},
        {"port", [](Config& c, const std::string& v) { c.port = parse_number<int>("port", v); }},
        {"viewport_limit", [](Config& c, const std::string& v) { c.viewport_limit = parse_positive("viewport_limit", v); }},
        {"viewport_hard_cap",
         [](Config& c, const std::string& v) { c.viewport_hard_cap = parse_positive("viewport_hard_cap", v); }},
        {"search_limit", [](Config& c, const std::string& v) { c.search_limit = parse_positive("search_limit", v); }},
        {"state_dir", [](Config& c, const std::string& v) { c.state_dir = v; }},
        {"seed", [](Config& c, const std::string& v) { c.seed = parse_number<std::uint64_t>("seed", v); }},
        {"embed_seed", [](Config& c, const std::string& v) { c.embed_seed = parse_number<std::uint64_t>("embed_seed", v); }},
        {"embed_dim", [](Config& c, const std::string& v) { c.embed_dim = parse_positive("embed_dim", v); }},
        {"min_pubs", [](Config& c, const std::string& v) { c.min_pubs = parse_number<int>("min_pubs", v); }},
        {"active_since", [](Config& c, const std::string& v) { c.active_since = parse_number<int>("active_since", v); }},
        {"max_facets", [](Config& c, const std::string& v) { c.max_facets = parse_positive("max_facets", v); }},
        {"layout_method", [](Config& c, const std::string& v) { c.layout_method = parse_layout_method(v); }},
        {"trust_sample", [](Config& c, const std::string& v) { c.trust_sample = parse_number<int>("trust_sample", v); }},
        {"node_size_min", [](Config& c, const std::string& v) { c.node_size.s_min = parse_number<double>("node_size_min", v); }},
        {"node_size_scale",
         [](Config& c, const std::string& v) { c.node_size.s_scale = parse_number<double>("node_size_scale", v); }},
        {"collab_k", [](Config& c, const std::string& v) { c.collab_k = parse_positive("collab_k", v); }},
        {"dataset_k", [](Config& c, const std::string& v) { c.dataset_k = parse_positive("dataset_k", v); }},
        {"exclusion_depth", [](Config& c, const std::string& v) { c.exclusion_depth = parse_positive("exclusion_depth", v); }},
        {"rerank_pool", [](Config& c, const std::string& v) { c.rerank_pool = parse_positive("rerank_pool", v); }},
        {"rerank_top_n", [](Config& c, const std::string& v) { c.rerank_top_n = parse_positive("rerank_top_n", v); }},
        {"rerank_parallelism",
         [](Config& c, const std::string& v) { c.rerank_parallelism = parse_positive("rerank_parallelism", v); }},
        {"path_depth_cap", [](Config& c, const std::string& v) { c.path_depth_cap = parse_positive("path_depth_cap", v); }},
        {"llm_timeout_ms", [](Config& c, const std::string& v) { c.llm_timeout_ms = parse_positive("llm_timeout_ms", v); }},
        {"llm_endpoint_env", [](Config& c, const std::string& v) { c.llm_endpoint_env = v; }},
        {"llm_api_key_env", [](Config& c, const std::string& v) { c.llm_api_key_env = v; }},
        {"llm_model_a_env", [](Config& c, const std::string& v) { c.llm_model_a_env = v; }},
        {"llm_model_b_env", [](Config& c, const std::string& v) { c.llm_model_b_env = v; }},
    };
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown config key: " + key);
    it->second(*this, value);
    if (viewport_limit > viewport_hard_cap) throw ConfigError("viewport_limit exceeds viewport_hard_cap");
}

nlohmann::json Config::to_json() const {
    // Server-only keys are left out so the build manifest does not change with them.
    return {{"seed", seed},
            {"embed_seed", embed_seed},
            {"embed_dim", embed_dim},
            {"min_pubs", min_pubs},
            {"active_since", active_since},
            {"max_facets", max_facets},
            {"layout_method", std::string(to_string(layout_method))},
            {"trust_sample", trust_sample},
            {"node_size_min", node_size.s_min},
            {"node_size_scale", node_size.s_scale},
            {"collab_k", collab_k},
            {"dataset_k", dataset_k},
            {"exclusion_depth", exclusion_depth}};
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    Config cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
        }
        try {
            cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

}  // namespace tkg
