#pragma once
// A synthetic corpus run through the full build into a temp dir, loaded back as a snapshot.

#include <memory>

#include "fixtures.hpp"
#include "tkg/pipeline.hpp"
#include "tkg/synth.hpp"

namespace fixture {

struct Built {
    TempDir dir{"tkg-built"};
    tkg::BuildManifest manifest;
    std::shared_ptr<const tkg::Snapshot> snapshot;

    std::filesystem::path corpus_dir() const { return dir / "corpus"; }
    std::filesystem::path out_dir() const { return dir / "out"; }
};

inline tkg::Config small_config(std::uint64_t seed = 1) {
    tkg::Config c;
    c.seed = seed;
    c.embed_seed = seed;
    c.embed_dim = 48;
    c.layout_method = tkg::LayoutMethod::pca;
    c.trust_sample = 200;
    return c;
}

inline std::unique_ptr<Built> build_small(int authors, std::uint64_t seed, int bio = 0,
                                          tkg::Config config = small_config()) {
    auto b = std::make_unique<Built>();
    tkg::SynthOptions o;
    o.authors = authors;
    o.bio_entities = bio;
    o.seed = seed;
    o.dim = static_cast<std::size_t>(config.embed_dim);
    o.embed_seed = config.embed_seed;
    tkg::write_synthetic(tkg::generate_synthetic(o), b->corpus_dir());
    b->manifest = tkg::run_build({b->corpus_dir(), b->out_dir(), config, false});
    b->snapshot = std::make_shared<const tkg::Snapshot>(tkg::load_snapshot(b->out_dir()));
    return b;
}

}  // namespace fixture
