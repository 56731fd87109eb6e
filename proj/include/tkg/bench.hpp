#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "tkg/server.hpp"

namespace tkg {

struct LatencyStats {
    std::size_t count = 0;
    double p50_ms = 0.0;
    double p95_ms = 0.0;
    double max_ms = 0.0;
    double mean_ms = 0.0;
};

LatencyStats summarize_latencies(std::vector<double> ms);

struct BenchOptions {
    int viewport_queries = 400;
    int search_queries = 400;
    std::uint64_t seed = 0;
    bool over_http = true;  // loopback HTTP round trips; false calls the service directly
};

struct BenchResult {
    LatencyStats viewport;
    LatencyStats search;
    std::size_t nodes = 0;
    nlohmann::json to_json() const;
};

// Random viewports over zoom levels 0-5 (box side = extent / 2^zoom) and random name
// substrings, timed end to end including JSON serialization.
BenchResult run_bench(ApiService& service, const BenchOptions& options);

}  // namespace tkg
