#pragma once
// In-memory counterpart of a build: synthetic corpus, author index, graph and facets.

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "tkg/agents.hpp"
#include "tkg/embedding.hpp"
#include "tkg/graphnet.hpp"
#include "tkg/recommend.hpp"
#include "tkg/synth.hpp"

namespace fixture {

struct World {
    tkg::Corpus corpus;
    tkg::EmbeddingTable paper_embeddings;
    tkg::EmbeddingTable author_table;
    tkg::SimilarityIndex index;
    tkg::CoauthorGraph graph;
    std::unordered_map<std::string, std::vector<tkg::ExpertiseFacet>> facets;
    std::size_t dim = 0;
    std::uint64_t embed_seed = 0;

    tkg::Embedder embedder() const { return tkg::make_pseudo_embedder(dim, embed_seed); }

    tkg::TeamingDeps deps(tkg::LlmClient* a, tkg::LlmClient* b = nullptr) const {
        tkg::TeamingDeps d;
        d.corpus = &corpus;
        d.graph = &graph;
        d.author_index = &index;
        d.facets = &facets;
        d.embed = embedder();
        d.backbone = a;
        d.backbone_b = b;
        d.clock = tkg::logical_clock();
        return d;
    }

    // Retained authors with at least one co-author, in id order.
    std::vector<std::string> connected_authors() const {
        std::vector<std::string> out;
        for (std::uint32_t i = 0; i < graph.node_count(); ++i)
            if (!graph.neighbors(i).empty()) out.push_back(graph.ids()[i]);
        return out;
    }
};

inline World make_world(int authors, std::uint64_t seed, std::size_t dim = 128, bool with_facets = false) {
    tkg::SynthOptions o;
    o.authors = authors;
    o.seed = seed;
    o.dim = dim;
    o.embed_seed = seed;
    o.write_paper_embeddings = true;
    auto s = tkg::generate_synthetic(o);
    World w;
    w.dim = dim;
    w.embed_seed = seed;
    w.corpus = tkg::filter_authors(s.corpus);
    w.paper_embeddings = std::move(*s.paper_embeddings);
    w.author_table = tkg::EmbeddingTable(dim);
    for (const auto& a : w.corpus.authors()) {
        if (a.external) continue;
        w.author_table.add(a.author_id, tkg::author_embedding(a.author_id, w.corpus, w.paper_embeddings));
        if (with_facets) w.facets[a.author_id] = tkg::cluster_expertise(a.author_id, w.corpus, w.paper_embeddings).facets;
    }
    w.index = tkg::SimilarityIndex::build(w.author_table);
    w.graph = tkg::build_coauthor_graph(w.corpus);
    return w;
}

// The scripted two-turn chat behind the golden transcript.
inline World golden_world() { return make_world(150, 31, 128, true); }

inline tkg::ChatSession golden_session(const World& w, tkg::LlmClient& a, tkg::LlmClient& b) {
    tkg::ChatSession s;
    s.session_id = "golden-1";
    s.author_id = w.connected_authors().front();
    s.seed = 77;
    auto deps = w.deps(&a, &b);
    tkg::run_teaming_chat(s, {"interpretable genotype-phenotype machine learning"}, deps);
    tkg::run_teaming_chat(s, {"single-cell imaging and microscopy", true}, deps);
    tkg::record_vote(s, "A", 1'800'000'000'000);
    tkg::record_vote(s, "B", 1'800'000'001'000);
    return s;
}

}  // namespace fixture
