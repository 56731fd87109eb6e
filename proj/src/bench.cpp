#include "tkg/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "httplib.h"
#include "tkg/errors.hpp"
#include "tkg/util.hpp"

namespace tkg {

LatencyStats summarize_latencies(std::vector<double> ms) {
    LatencyStats s;
    s.count = ms.size();
    if (ms.empty()) return s;
    std::sort(ms.begin(), ms.end());
    // nearest-rank percentiles
    auto rank = [&](double p) {
        const auto r = static_cast<std::size_t>(std::ceil(p * static_cast<double>(ms.size())));
        return ms[std::clamp<std::size_t>(r, 1, ms.size()) - 1];
    };
    s.p50_ms = rank(0.50);
    s.p95_ms = rank(0.95);
    s.max_ms = ms.back();
    double total = 0.0;
    for (double v : ms) total += v;
    s.mean_ms = total / static_cast<double>(ms.size());
    return s;
}

nlohmann::json BenchResult::to_json() const {
    auto stats = [](const LatencyStats& s) {
        return nlohmann::json{{"count", s.count}, {"p50_ms", s.p50_ms}, {"p95_ms", s.p95_ms},
                              {"max_ms", s.max_ms}, {"mean_ms", s.mean_ms}};
    };
    return {{"nodes", nodes}, {"viewport", stats(viewport)}, {"search", stats(search)}};
}

BenchResult run_bench(ApiService& service, const BenchOptions& o) {
    const auto& nodes = service.nodes();
    if (nodes.empty()) throw ContractViolation("bench: snapshot has no nodes");
    Rng rng(o.seed);

    double x0 = nodes[0].x, x1 = x0, y0 = nodes[0].y, y1 = y0;
    for (const auto& n : nodes) {
        x0 = std::min(x0, n.x), x1 = std::max(x1, n.x);
        y0 = std::min(y0, n.y), y1 = std::max(y1, n.y);
    }
    const double w = std::max(1e-6, x1 - x0), h = std::max(1e-6, y1 - y0);

    std::vector<std::string> viewport_targets;
    for (int i = 0; i < o.viewport_queries; ++i) {
        const int zoom = static_cast<int>(uniform_index(rng, 6));
        const double scale = std::ldexp(1.0, -zoom);
        const double cx = x0 + uniform01(rng) * w, cy = y0 + uniform01(rng) * h;
        const double hw = 0.5 * w * scale, hh = 0.5 * h * scale;
        char buf[200];
        std::snprintf(buf, sizeof buf, "/api/v1/nodes?bbox=%.6f,%.6f,%.6f,%.6f&zoom=%d", cx - hw, cy - hh, cx + hw,
                      cy + hh, zoom);
        viewport_targets.emplace_back(buf);
    }
    std::vector<std::string> search_targets;
    for (int i = 0; i < o.search_queries; ++i) {
        const auto& n = nodes[uniform_index(rng, nodes.size())];
        auto name = to_lower_ascii(service.snapshot().corpus.author_index(n.node_id)
                                       ? service.snapshot().corpus.author(n.node_id).name
                                       : n.node_id);
        std::string q = name;
        if (i % 4 != 0 && name.size() > 4) {
            const std::size_t len = 3 + uniform_index(rng, 2);
            q = name.substr(uniform_index(rng, name.size() - len + 1), len);
        }
        for (auto& c : q) {
            if (c == ' ') c = '+';
        }
        search_targets.push_back("/api/v1/search?q=" + q);
    }

    BenchResult result;
    result.nodes = nodes.size();
    using Clock = std::chrono::steady_clock;

    auto run_direct = [&](const std::vector<std::string>& targets) {
        std::vector<double> ms;
        for (const auto& t : targets) {
            const auto qpos = t.find('?');
            const std::string path = t.substr(0, qpos);
            QueryParams params;
            httplib::detail::parse_query_text(t.substr(qpos + 1), params);
            const auto start = Clock::now();
            auto r = service.handle("GET", path, params);
            const auto body = r.dump();
            ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - start).count());
            if (r.status != 200) throw std::runtime_error("bench request failed: " + t + " -> " + body);
        }
        return ms;
    };

    if (!o.over_http) {
        result.viewport = summarize_latencies(run_direct(viewport_targets));
        result.search = summarize_latencies(run_direct(search_targets));
        return result;
    }

    httplib::Server server;
    mount_routes(server, service);
    const int port = server.bind_to_any_port("127.0.0.1");
    if (port <= 0) throw std::runtime_error("bench: cannot bind a loopback port");
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    httplib::Client client("127.0.0.1", port);
    client.set_keep_alive(true);
    client.set_tcp_nodelay(true);
    auto run_http = [&](const std::vector<std::string>& targets) {
        std::vector<double> ms;
        for (const auto& t : targets) {
            const auto start = Clock::now();
            auto res = client.Get(t);
            ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - start).count());
            if (!res || res->status != 200) {
                server.stop();
                thread.join();
                throw std::runtime_error("bench request failed: " + t);
            }
        }
        return ms;
    };
    try {
        client.Get("/api/v1/healthz");  // warm the connection
        result.viewport = summarize_latencies(run_http(viewport_targets));
        result.search = summarize_latencies(run_http(search_targets));
    } catch (...) {
        if (thread.joinable()) {
            server.stop();
            thread.join();
        }
        throw;
    }
    server.stop();
    thread.join();
    return result;
}

}  // namespace tkg
