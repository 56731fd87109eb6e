// Operator entry point: build, serve, recommend, path, synth, bench.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <memory>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "httplib.h"
#include "tkg/bench.hpp"
#include "tkg/config.hpp"
#include "tkg/errors.hpp"
#include "tkg/pipeline.hpp"
#include "tkg/server.hpp"
#include "tkg/synth.hpp"

namespace fs = std::filesystem;
using namespace tkg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;

int fail(int code, const std::string& message) {
    std::fprintf(stderr, "error: %s\n", message.c_str());
    return code;
}

std::shared_ptr<const Snapshot> open_snapshot(const fs::path& dir) {
    return std::make_shared<const Snapshot>(load_snapshot(dir));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"talentkg: talent knowledge graph builder and server"};
    app.require_subcommand(1);
    std::string config_path, log_level = "info";
    app.add_option("--config", config_path, "key = value config file");
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

    // build
    auto* build = app.add_subcommand("build", "Run the artifact pipeline over a corpus directory");
    std::string b_corpus, b_out, b_method;
    std::optional<std::uint64_t> b_seed;
    bool b_skip_recs = false;
    build->add_option("corpus_dir", b_corpus)->required();
    build->add_option("out_dir", b_out)->required();
    build->add_option("--seed", b_seed);
    build->add_option("--method", b_method, "pca | neighbor_embedding");
    build->add_flag("--skip-recs", b_skip_recs);

    // serve
    auto* serve = app.add_subcommand("serve", "Serve a built artifact directory over HTTP");
    std::string s_dir, s_host;
    std::optional<int> s_port;
    bool s_mock = false;
    serve->add_option("artifact_dir", s_dir)->required();
    serve->add_option("--port", s_port);
    serve->add_option("--host", s_host);
    serve->add_flag("--mock-llm", s_mock, "Use the deterministic mock backbone");

    // recommend
    auto* recommend = app.add_subcommand("recommend", "Print precomputed recommendations");
    std::string r_dir, r_author, r_dataset;
    int r_k = 0;
    bool r_json = false;
    recommend->add_option("artifact_dir", r_dir)->required();
    auto* r_author_opt = recommend->add_option("--author", r_author);
    auto* r_dataset_opt = recommend->add_option("--dataset", r_dataset);
    r_author_opt->excludes(r_dataset_opt);
    recommend->add_option("--k", r_k, "Rows to print (default: all)");
    recommend->add_flag("--json", r_json, "Print the HTTP payload instead of a table");

    // path
    auto* pathcmd = app.add_subcommand("path", "Shortest co-authorship path between two authors");
    std::string p_dir, p_from, p_to;
    pathcmd->add_option("artifact_dir", p_dir)->required();
    pathcmd->add_option("--from", p_from)->required();
    pathcmd->add_option("--to", p_to)->required();

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
    SynthOptions so;
    std::string y_out;
    synth->add_option("out_dir", y_out)->required();
    synth->add_option("--authors", so.authors);
    synth->add_option("--papers", so.papers, "0: 2 x authors");
    synth->add_option("--datasets", so.datasets, "0: authors / 25");
    synth->add_option("--bio", so.bio_entities);
    synth->add_option("--topics", so.topics);
    synth->add_option("--external-fraction", so.external_fraction);
    synth->add_option("--seed", so.seed);
    auto* y_dim = synth->add_option("--dim", so.dim, "default: embed_dim from the config");
    synth->add_flag("--paper-embeddings", so.write_paper_embeddings, "Also write embeddings.f32");

    // bench
    auto* bench = app.add_subcommand("bench", "Latency of viewport and search queries over loopback HTTP");
    std::string k_dir;
    BenchOptions bo;
    bench->add_option("artifact_dir", k_dir)->required();
    bench->add_option("--viewport-queries", bo.viewport_queries);
    bench->add_option("--search-queries", bo.search_queries);
    bench->add_option("--seed", bo.seed);

    CLI11_PARSE(app, argc, argv);

    spdlog::set_default_logger(spdlog::stderr_color_mt("talentkg"));
    spdlog::set_level(spdlog::level::from_str(log_level));

    Config cfg;
    try {
        if (!config_path.empty()) cfg = load_config(config_path);
    } catch (const ConfigError& e) {
        return fail(kExitConfig, e.what());
    }

    try {
        if (*build) {
            if (b_seed) cfg.seed = *b_seed;
            if (!b_method.empty()) cfg.layout_method = parse_layout_method(b_method);
            const auto start = std::chrono::steady_clock::now();
            const auto m = run_build({b_corpus, b_out, cfg, b_skip_recs});
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            for (const auto& [name, sum] : m.checksums()) std::printf("%-16s %s\n", name.c_str(), sum.c_str());
            std::printf("snapshot %s built in %.1f s\n", m.snapshot_version.c_str(), secs);
            return kExitOk;
        }
        if (*synth) {
            so.embed_seed = cfg.embed_seed;
            if (y_dim->count() == 0) so.dim = static_cast<std::size_t>(cfg.embed_dim);
            const auto s = generate_synthetic(so);
            write_synthetic(s, y_out);
            std::printf("%zu papers, %zu authors (%zu retained), %zu datasets, %zu bio entities\n",
                        s.corpus.papers().size(), s.corpus.authors().size(),
                        filter_authors(s.corpus, cfg.min_pubs, cfg.active_since).retained_author_count(),
                        s.corpus.datasets().size(), s.corpus.bio_entities().size());
            return kExitOk;
        }

        std::shared_ptr<const Snapshot> snap;
        const std::string dir = *serve ? s_dir : *recommend ? r_dir : *pathcmd ? p_dir : k_dir;
        try {
            snap = open_snapshot(dir);
        } catch (const LoadError& e) {
            return fail(kExitData, e.what());
        } catch (const ValidationError& e) {
            return fail(kExitData, e.what());
        }

        ServiceOptions opts;
        opts.config = cfg;
        if (*recommend) {
            ApiService service(snap, opts);
            const std::string id = r_author.empty() ? r_dataset : r_author;
            if (id.empty()) return fail(kExitConfig, "one of --author or --dataset is required");
            const auto kind = r_author.empty() ? "dataset_users" : "collaborators";
            auto res = service.handle("GET", "/api/v1/node/" + id + "/recommendations", {{"kind", kind}});
            if (res.status != 200) return fail(kExitConfig, res.body["error"]["message"].get<std::string>());
            auto& items = res.body["items"];
            if (r_k > 0 && items.size() > static_cast<std::size_t>(r_k)) {
                items.erase(items.begin() + r_k, items.end());
                res.body["count"] = items.size();
            }
            if (r_json) {
                std::printf("%s\n", res.body.dump(2).c_str());
            } else {
                std::printf("%-5s %-14s %-32s %s\n", "rank", "candidate", "name", "score");
                for (const auto& it : items) {
                    std::printf("%-5d %-14s %-32s %.6f\n", it["rank"].get<int>(), it["candidate_id"].get<std::string>().c_str(),
                                it["name"].get<std::string>().c_str(), it["score"].get<double>());
                }
            }
            return kExitOk;
        }
        if (*pathcmd) {
            ApiService service(snap, opts);
            auto res = service.handle("GET", "/api/v1/path", {{"from", p_from}, {"to", p_to}});
            if (res.status != 200) return fail(kExitConfig, res.body["error"]["message"].get<std::string>());
            if (!res.body["found"].get<bool>()) {
                std::printf("no path within depth cap %d\n", res.body["depth_cap"].get<int>());
                return kExitOk;
            }
            std::string line;
            for (const auto& step : res.body["path"]) {
                if (!line.empty()) line += " -> ";
                line += step["id"].get<std::string>() + " (" + step["name"].get<std::string>() + ")";
            }
            std::printf("%s\ndistance: %d\n", line.c_str(), res.body["distance"].get<int>());
            return kExitOk;
        }
        if (*bench) {
            ApiService service(snap, opts);
            std::printf("%s\n", run_bench(service, bo).to_json().dump(2).c_str());
            return kExitOk;
        }
        if (*serve) {
            if (s_port) cfg.port = *s_port;
            if (!s_host.empty()) cfg.host = s_host;
            opts.config = cfg;
            if (s_mock) {
                opts.backbone = std::make_shared<MockLlmClient>("mock-a", 0);
                opts.backbone_b = std::make_shared<MockLlmClient>("mock-b", 5);
                opts.clock = logical_clock();
            } else if (const char* endpoint = std::getenv(cfg.llm_endpoint_env.c_str()); endpoint && *endpoint) {
                auto make = [&](const std::string& model_env) -> std::shared_ptr<LlmClient> {
                    const char* model = std::getenv(model_env.c_str());
                    if (!model || !*model) return nullptr;
                    const char* key = std::getenv(cfg.llm_api_key_env.c_str());
                    return std::make_shared<HttpLlmClient>(HttpLlmConfig{
                        endpoint, key ? key : "", model, std::chrono::milliseconds(cfg.llm_timeout_ms)});
                };
                opts.backbone = make(cfg.llm_model_a_env);
                opts.backbone_b = make(cfg.llm_model_b_env);
                if (!opts.backbone) return fail(kExitConfig, cfg.llm_model_a_env + " is not set");
            } else {
                spdlog::warn("no LLM endpoint configured ({}); chat and justifications are disabled",
                             cfg.llm_endpoint_env);
            }
            opts.state_dir = cfg.state_dir.empty() ? fs::path(s_dir) / "state" : fs::path(cfg.state_dir);
            ApiService service(snap, opts);
            httplib::Server server;
            mount_routes(server, service);
            spdlog::info("serving snapshot {} on http://{}:{}/api/v1", snap->manifest.snapshot_version, cfg.host,
                         cfg.port);
            if (!server.listen(cfg.host, cfg.port)) return fail(kExitConfig, "cannot listen on port " + std::to_string(cfg.port));
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        return fail(kExitConfig, e.what());
    } catch (const LoadError& e) {
        return fail(kExitData, e.what());
    } catch (const ValidationError& e) {
        return fail(kExitData, e.what());
    } catch (const NotFoundError& e) {
        return fail(kExitConfig, e.what());
    } catch (const std::exception& e) {
        return fail(kExitData, e.what());
    }
    return kExitOk;
}
