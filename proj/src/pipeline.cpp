#include "tkg/pipeline.hpp"

#include <fstream>

#include <spdlog/spdlog.h>

#include "tkg/errors.hpp"
#include "tkg/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace tkg {

nlohmann::json BuildManifest::to_json() const {
    json stages_json = json::array();
    for (const auto& s : stages) {
        json files = json::array();
        for (const auto& [path, sha] : s.files) files.push_back({{"path", path}, {"sha256", sha}});
        stages_json.push_back(
            {{"name", s.name}, {"files", files}, {"checksum", s.checksum}, {"valid", s.valid}, {"info", s.info}});
    }
    return {{"format", "talentkg-manifest/1"},
            {"input_corpus", input_corpus},
            {"output_dir", output_dir},
            {"seed", seed},
            {"config", config},
            {"stages", stages_json},
            {"complete", complete},
            {"snapshot_version", snapshot_version}};
}

BuildManifest BuildManifest::from_json(const nlohmann::json& j) {
    BuildManifest m;
    m.input_corpus = j.at("input_corpus").get<std::string>();
    m.output_dir = j.at("output_dir").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config = j.at("config");
    for (const auto& s : j.at("stages")) {
        StageRecord r;
        r.name = s.at("name").get<std::string>();
        for (const auto& f : s.at("files")) r.files.emplace_back(f.at("path").get<std::string>(), f.at("sha256").get<std::string>());
        r.checksum = s.at("checksum").get<std::string>();
        r.valid = s.at("valid").get<bool>();
        r.info = s.value("info", json::object());
        m.stages.push_back(std::move(r));
    }
    m.complete = j.at("complete").get<bool>();
    m.snapshot_version = j.at("snapshot_version").get<std::string>();
    return m;
}

std::vector<std::pair<std::string, std::string>> BuildManifest::checksums() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& s : stages) out.emplace_back(s.name, s.checksum);
    return out;
}

EmbeddingTable paper_embeddings_for(const Corpus& corpus, const fs::path& corpus_dir, std::size_t dim,
                                    std::uint64_t embed_seed) {
    if (auto shipped = load_paper_embeddings(corpus_dir)) return std::move(*shipped);
    EmbeddingTable table(dim);
    for (const auto& p : corpus.papers()) {
        const auto v = pseudo_embed(p.title + "\n" + p.abstract, dim, embed_seed);
        table.add(p.paper_id, v.values());
    }
    return table;
}

namespace {

StageRecord seal_stage(const std::string& name, const fs::path& out, const std::vector<std::string>& files,
                       json info = json::object()) {
    StageRecord r;
    r.name = name;
    std::string digest_input;
    for (const auto& f : files) {
        const auto sha = sha256_file(out / f);
        r.files.emplace_back(f, sha);
        digest_input += f + ":" + sha + "\n";
    }
    r.checksum = sha256_hex(digest_input);
    r.valid = true;
    r.info = std::move(info);
    return r;
}

void write_manifest(BuildManifest& m, const fs::path& out) {
    std::string all;
    for (const auto& s : m.stages) all += s.name + ":" + s.checksum + "\n";
    m.snapshot_version = m.complete ? sha256_hex(all).substr(0, 16) : "";
    write_file(out / kManifestFile, m.to_json().dump(2) + "\n");
}

void write_recs(std::ofstream& out, const char* kind, const std::string& node_id, const std::vector<Recommendation>& recs) {
    json items = json::array();
    for (const auto& r : recs) items.push_back({r.candidate_id, r.score});
    out << json{{"kind", kind}, {"node_id", node_id}, {"items", items}}.dump() << '\n';
}

}  // namespace

BuildManifest run_build(const BuildOptions& options) {
    const auto& cfg = options.config;
    const fs::path out = options.out_dir;
    fs::create_directories(out / "corpus");

    BuildManifest manifest;
    manifest.input_corpus = fs::absolute(options.corpus_dir).lexically_normal().string();
    manifest.output_dir = fs::absolute(out).lexically_normal().string();
    manifest.seed = cfg.seed;
    manifest.config = cfg.to_json();
    manifest.config["skip_recs"] = options.skip_recs;
    fs::remove(out / kManifestFile);

    const auto& names = build_stage_names();
    std::size_t stage = 0;
    try {
        // corpus: validate, filter
        const Corpus raw = load_corpus(options.corpus_dir);
        const Corpus corpus = filter_authors(raw, cfg.min_pubs, cfg.active_since);
        save_corpus(corpus, out / "corpus");
        std::vector<std::string> corpus_files = {"corpus/papers.jsonl", "corpus/authors.jsonl", "corpus/datasets.jsonl"};
        if (!corpus.bio_entities().empty()) corpus_files.push_back("corpus/bio_entities.jsonl");
        manifest.stages.push_back(seal_stage(names[stage++], out, corpus_files,
                                             {{"papers", corpus.papers().size()},
                                              {"authors_retained", corpus.retained_author_count()},
                                              {"authors_external", corpus.authors().size() - corpus.retained_author_count()},
                                              {"datasets", corpus.datasets().size()},
                                              {"bio_entities", corpus.bio_entities().size()}}));
        spdlog::info("corpus: {} papers, {} retained authors", corpus.papers().size(), corpus.retained_author_count());

        // embeddings
        const auto papers = paper_embeddings_for(corpus, options.corpus_dir, static_cast<std::size_t>(cfg.embed_dim),
                                                 cfg.embed_seed);
        EmbeddingTable authors(papers.dim()), facets(papers.dim()), datasets(papers.dim());
        std::ofstream facet_meta(out / "facets.jsonl", std::ios::trunc);
        ClusterOptions copts;
        copts.max_facets = cfg.max_facets;
        copts.seed = cfg.seed;
        std::size_t degenerate = 0;
        for (const auto& a : corpus.authors()) {
            if (a.external) continue;
            try {
                const auto profile = cluster_expertise(a.author_id, corpus, papers, copts);
                authors.add(a.author_id, profile.primary_embedding.values());
                json fj = json::array();
                for (std::size_t k = 0; k < profile.facets.size(); ++k) {
                    const auto& f = profile.facets[k];
                    facets.add(a.author_id + "#" + std::to_string(k), f.centroid.values());
                    fj.push_back({{"paper_ids", f.paper_ids}, {"weight", f.weight}});
                }
                facet_meta << json{{"author_id", a.author_id}, {"facets", fj}}.dump() << '\n';
            } catch (const DegenerateError& e) {
                ++degenerate;
                spdlog::warn("author {} has no embedding: {}", a.author_id, e.what());
            }
        }
        facet_meta.close();
        std::size_t unused_datasets = 0;
        for (const auto& d : corpus.datasets()) {
            try {
                datasets.add(d.dataset_id, dataset_embedding(d.dataset_id, corpus, papers).values());
            } catch (const DegenerateError&) {
                ++unused_datasets;
            }
        }
        write_embedding_table(authors, out / "author_embeddings.f32", out / "author_embeddings.index.jsonl");
        write_embedding_table(facets, out / "facet_embeddings.f32", out / "facet_embeddings.index.jsonl");
        write_embedding_table(datasets, out / "dataset_embeddings.f32", out / "dataset_embeddings.index.jsonl");
        manifest.stages.push_back(seal_stage(
            names[stage++], out,
            {"author_embeddings.f32", "author_embeddings.index.jsonl", "facet_embeddings.f32",
             "facet_embeddings.index.jsonl", "facets.jsonl", "dataset_embeddings.f32", "dataset_embeddings.index.jsonl"},
            {{"dim", papers.dim()},
             {"authors", authors.size()},
             {"authors_without_signal", degenerate},
             {"facets", facets.size()},
             {"datasets", datasets.size()},
             {"datasets_without_users", unused_datasets}}));

        // index
        const auto index = SimilarityIndex::build(authors);
        write_file(out / "index.json", json{{"version", index.version()},
                                            {"size", index.size()},
                                            {"dim", index.dim()},
                                            {"metric", "cosine"}}
                                           .dump(2) + "\n");
        manifest.stages.push_back(seal_stage(names[stage++], out, {"index.json"}, {{"version", index.version()}}));

        // graph
        const auto graph = build_coauthor_graph(corpus);
        {
            std::ofstream g(out / "graph.jsonl", std::ios::trunc);
            for (const auto& e : graph.edges()) g << json{{"a", e.a}, {"b", e.b}, {"papers", e.papers}}.dump() << '\n';
        }
        manifest.stages.push_back(seal_stage(names[stage++], out, {"graph.jsonl"},
                                             {{"nodes", graph.node_count()}, {"edges", graph.edge_count()}}));
        spdlog::info("graph: {} nodes, {} edges", graph.node_count(), graph.edge_count());

        // layout: authors, datasets and bio entities without a stored position share one space
        EmbeddingTable points(papers.dim());
        for (std::size_t r = 0; r < authors.size(); ++r) points.add(authors.id(r), authors.row(r));
        for (std::size_t r = 0; r < datasets.size(); ++r) points.add(datasets.id(r), datasets.row(r));
        for (const auto& b : corpus.bio_entities()) {
            if (b.position || !b.embedding) continue;
            if (b.embedding->dim() != papers.dim()) {
                throw ValidationError("bio entity " + b.entity_id + " embedding has dimension " +
                                      std::to_string(b.embedding->dim()) + ", expected " + std::to_string(papers.dim()));
            }
            points.add(b.entity_id, b.embedding->values());
        }
        LayoutResult layout;
        if (points.size() >= 2) {
            layout = reduce_to_2d(points, cfg.layout_method, cfg.seed);
        } else {
            layout.method = cfg.layout_method;
            for (std::size_t r = 0; r < points.size(); ++r) {
                layout.ids.push_back(points.id(r));
                layout.coords.push_back({0.0, 0.0});
            }
        }
        json layout_info = {{"method", std::string(to_string(layout.method))}, {"points", points.size()}};
        if (cfg.trust_sample > 0 && points.size() > 40) {
            const double t = trustworthiness_sampled(points, layout.coords, 10,
                                                     static_cast<std::size_t>(cfg.trust_sample), cfg.seed);
            layout_info["trustworthiness_k10"] = t;
            spdlog::info("layout trustworthiness (k=10, sampled): {:.4f}", t);
        }
        const auto views = make_node_views(corpus, layout, cfg.node_size);
        layout_info["nodes"] = views.views.size();
        layout_info["skipped"] = views.skipped;
        write_layout_jsonl(views.views, out / "layout.jsonl");
        manifest.stages.push_back(seal_stage(names[stage++], out, {"layout.jsonl"}, layout_info));

        // recommendations
        {
            std::ofstream recs(out / "recommendations.jsonl", std::ios::trunc);
            std::size_t lists = 0;
            if (!options.skip_recs && index.size() > 0) {
                const auto author_recs =
                    batch_top_k_collaborators(authors.ids(), index, graph, cfg.collab_k, cfg.exclusion_depth);
                for (std::size_t i = 0; i < authors.size(); ++i) write_recs(recs, "collaborators", authors.id(i), author_recs[i]);
                const auto ds_recs = batch_top_k_dataset_users(datasets.ids(), index, datasets, corpus, cfg.dataset_k);
                for (std::size_t i = 0; i < datasets.size(); ++i) write_recs(recs, "dataset_users", datasets.id(i), ds_recs[i]);
                lists = authors.size() + datasets.size();
            }
            recs.close();
            manifest.stages.push_back(seal_stage(names[stage++], out, {"recommendations.jsonl"},
                                                 {{"lists", lists}, {"skipped", options.skip_recs}}));
        }
        manifest.complete = true;
        write_manifest(manifest, out);
        return manifest;
    } catch (...) {
        for (std::size_t s = stage; s < names.size(); ++s) {
            StageRecord r;
            r.name = names[s];
            r.valid = false;
            manifest.stages.push_back(std::move(r));
        }
        manifest.complete = false;
        try {
            write_manifest(manifest, out);
        } catch (const std::exception& e) {
            spdlog::error("could not write manifest: {}", e.what());
        }
        throw;
    }
}

Snapshot load_snapshot(const fs::path& dir) {
    const auto manifest_path = dir / kManifestFile;
    if (!fs::exists(manifest_path)) throw LoadError(std::string(kManifestFile) + " not found in " + dir.string());
    Snapshot snap;
    try {
        snap.manifest = BuildManifest::from_json(json::parse(read_file(manifest_path)));
    } catch (const json::exception& e) {
        throw LoadError(std::string(kManifestFile) + " is malformed: " + e.what());
    }
    const auto& m = snap.manifest;
    if (!m.complete) throw LoadError(std::string(kManifestFile) + " marks an incomplete build");
    for (const auto& s : m.stages) {
        if (!s.valid) throw LoadError("stage " + s.name + " is invalid in " + kManifestFile);
        for (const auto& [rel, sha] : s.files) {
            if (!fs::exists(dir / rel)) throw LoadError(rel + " not found");
            if (sha256_file(dir / rel) != sha) throw LoadError(rel + " does not match its manifest checksum");
        }
    }

    for (const auto& [key, value] : m.config.items()) {
        if (key == "skip_recs") continue;
        snap.config.set(key, value.is_string() ? value.get<std::string>() : value.dump());
    }

    snap.corpus = load_corpus(dir / "corpus");
    const auto authors = read_embedding_table(dir / "author_embeddings.f32", dir / "author_embeddings.index.jsonl");
    snap.author_index = SimilarityIndex::build(authors);
    snap.dataset_embeddings =
        read_embedding_table(dir / "dataset_embeddings.f32", dir / "dataset_embeddings.index.jsonl");

    const auto facet_vectors = read_embedding_table(dir / "facet_embeddings.f32", dir / "facet_embeddings.index.jsonl");
    {
        std::ifstream in(dir / "facets.jsonl");
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto j = json::parse(line);
            const auto author = j.at("author_id").get<std::string>();
            auto& list = snap.facets[author];
            const auto& arr = j.at("facets");
            for (std::size_t k = 0; k < arr.size(); ++k) {
                ExpertiseFacet f;
                f.paper_ids = arr[k].at("paper_ids").get<std::vector<std::string>>();
                f.weight = arr[k].at("weight").get<double>();
                if (auto row = facet_vectors.find(author + "#" + std::to_string(k))) f.centroid = facet_vectors.vector(*row);
                list.push_back(std::move(f));
            }
        }
    }

    std::vector<CoauthorGraph::Edge> edges;
    {
        std::ifstream in(dir / "graph.jsonl");
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto j = json::parse(line);
            edges.push_back({j.at("a").get<std::string>(), j.at("b").get<std::string>(),
                             j.at("papers").get<std::vector<std::string>>()});
        }
    }
    std::vector<std::string> node_ids;
    for (const auto& a : snap.corpus.authors()) {
        if (!a.external) node_ids.push_back(a.author_id);
    }
    snap.graph = CoauthorGraph::from_edges(std::move(node_ids), edges);
    snap.nodes = read_layout_jsonl(dir / "layout.jsonl");

    {
        std::ifstream in(dir / "recommendations.jsonl");
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto j = json::parse(line);
            std::vector<Recommendation> recs;
            int rank = 0;
            for (const auto& item : j.at("items")) {
                recs.push_back({item.at(0).get<std::string>(), item.at(1).get<double>(), ++rank, true});
            }
            const auto kind = j.at("kind").get<std::string>();
            auto& target = kind == "collaborators" ? snap.collaborator_recs : snap.dataset_recs;
            target.emplace(j.at("node_id").get<std::string>(), std::move(recs));
        }
    }
    return snap;
}

}  // namespace tkg
