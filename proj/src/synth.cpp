#include "tkg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "tkg/embedding.hpp"
#include "tkg/errors.hpp"
#include "tkg/util.hpp"

namespace tkg {

namespace {

constexpr int kFirstYear = 2000;
constexpr int kLastYear = 2025;
constexpr int kTopicWords = 40;

const std::vector<std::string> kGeneralWords = {
    "analysis", "model",     "learning",   "network",    "study",     "approach", "data",     "framework",
    "method",   "inference", "prediction", "evaluation", "structure", "dynamics", "large",    "scale",
    "robust",   "efficient", "novel",      "integrated", "systems",   "response", "mapping",  "profiling"};

const std::vector<std::string> kOnsets = {"b", "c", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z",
                                          "br", "cr", "dr", "gl", "pl", "st", "tr", "th", "sh", "ch"};
const std::vector<std::string> kVowels = {"a", "e", "i", "o", "u", "ai", "eo", "ia", "ou"};
const std::vector<std::string> kCodas = {"", "n", "r", "s", "l", "x", "m", "nd", "st", "th"};

const std::vector<std::string> kFirstNames = {
    "Ada",   "Ben",  "Chen",  "Dana",  "Eli",   "Fatima", "Gustav", "Hana",  "Ivan",  "Jun",   "Kofi",
    "Lena",  "Mira", "Nikos", "Omar",  "Priya", "Quinn",  "Rosa",   "Sven",  "Tomas", "Uma",   "Vera",
    "Wei",   "Xena", "Yuki",  "Zara",  "Amir",  "Bea",    "Carlos", "Dmitri", "Elena", "Felix", "Greta",
    "Hugo",  "Ines", "Jonas", "Kira",  "Luis",  "Maya",   "Noor",   "Oskar", "Paula", "Rafael", "Sofia"};
const std::vector<std::string> kAffiliations = {
    "Northfield University",       "Institute for Systems Biology", "Lakeside Medical Center",
    "Harbor Institute of Technology", "Central State University",   "Riverside Cancer Research Center",
    "Eastgate College",            "National Genomics Laboratory",  "Summit School of Medicine",
    "Westbrook Research Institute", "Pinecrest University",         "Metropolitan Data Science Institute"};
const std::vector<std::string> kDatasetNouns = {"Cohort", "Atlas", "Database", "Panel", "Registry", "Collection",
                                                "Benchmark", "Survey"};

std::string capitalize(std::string s) {
    if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
    return s;
}

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
    return v[uniform_index(rng, v.size())];
}

std::string make_word(Rng& rng, int syllables) {
    std::string w;
    for (int s = 0; s < syllables; ++s) w += pick(kOnsets, rng) + pick(kVowels, rng);
    return w + pick(kCodas, rng);
}

std::string padded(char prefix, std::size_t value, std::size_t total) {
    int width = 1;
    for (std::size_t t = total; t >= 10; t /= 10) ++width;
    std::string digits = std::to_string(value);
    if (digits.size() < static_cast<std::size_t>(width)) digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
    return prefix + digits;
}

// Weighted sampler over a fixed item list (cumulative sums + binary search).
struct WeightedPool {
    std::vector<std::size_t> items;
    std::vector<double> cumulative;

    void add(std::size_t item, double w) {
        items.push_back(item);
        cumulative.push_back((cumulative.empty() ? 0.0 : cumulative.back()) + w);
    }
    bool empty() const { return items.empty(); }
    std::size_t sample(Rng& rng) const {
        const double u = uniform01(rng) * cumulative.back();
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        if (it == cumulative.end()) --it;
        return items[static_cast<std::size_t>(it - cumulative.begin())];
    }
};

}  // namespace

SyntheticCorpus generate_synthetic(const SynthOptions& o) {
    if (o.authors < 2) throw ContractViolation("synth: need at least 2 authors");
    if (o.papers < 0 || o.datasets < 0 || o.bio_entities < 0 || o.topics < 0) {
        throw ContractViolation("synth: sizes must be non-negative");
    }
    if (!(o.external_fraction >= 0.0 && o.external_fraction < 1.0)) {
        throw ContractViolation("synth: external_fraction must be in [0, 1)");
    }
    const std::size_t n_authors = static_cast<std::size_t>(o.authors);
    const std::size_t n_papers = static_cast<std::size_t>(o.papers > 0 ? o.papers : 2 * o.authors);
    const std::size_t n_datasets = static_cast<std::size_t>(o.datasets > 0 ? o.datasets : std::max(1, o.authors / 25));
    const int n_topics = o.topics > 0 ? o.topics : std::clamp(o.authors / 250, 4, 40);
    const std::size_t n_core = std::max<std::size_t>(
        2, n_authors - static_cast<std::size_t>(std::llround(o.external_fraction * static_cast<double>(n_authors))));

    Rng rng(o.seed);
    SyntheticCorpus out;

    // topic vocabularies, unique across topics
    std::vector<std::vector<std::string>> vocab(static_cast<std::size_t>(n_topics));
    std::set<std::string> used(kGeneralWords.begin(), kGeneralWords.end());
    for (auto& words : vocab) {
        while (words.size() < kTopicWords) {
            auto w = make_word(rng, 2 + static_cast<int>(uniform_index(rng, 2)));
            if (used.insert(w).second) words.push_back(std::move(w));
        }
    }
    auto topic_text = [&](int topic, std::size_t n_words, double general_share) {
        std::string s;
        for (std::size_t i = 0; i < n_words; ++i) {
            if (i) s += ' ';
            s += uniform01(rng) < general_share ? pick(kGeneralWords, rng) : pick(vocab[static_cast<std::size_t>(topic)], rng);
        }
        return s;
    };

    // authors: core first in id order would make ids leak group membership, so shuffle roles
    std::vector<char> is_core(n_authors, 0);
    std::fill(is_core.begin(), is_core.begin() + static_cast<std::ptrdiff_t>(n_core), 1);
    seeded_shuffle(is_core, rng);

    std::vector<AuthorRecord> authors(n_authors);
    out.author_topic.resize(n_authors);
    std::vector<int> second_topic(n_authors);
    std::vector<WeightedPool> topic_pool(static_cast<std::size_t>(n_topics));
    std::vector<std::string> surnames;
    while (surnames.size() < 400) surnames.push_back(capitalize(make_word(rng, 2)));
    for (std::size_t i = 0; i < n_authors; ++i) {
        auto& a = authors[i];
        a.author_id = padded('A', i + 1, n_authors);
        a.name = pick(kFirstNames, rng) + " " + pick(surnames, rng);
        a.affiliation = pick(kAffiliations, rng);
        const int topic = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(n_topics)));
        out.author_topic[i] = topic;
        second_topic[i] = uniform01(rng) < 0.3 ? static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(n_topics)))
                                               : topic;
        // power-law productivity
        const double w = std::min(200.0, std::pow(1.0 - uniform01(rng), -1.0 / 1.2));
        if (is_core[i]) {
            topic_pool[static_cast<std::size_t>(topic)].add(i, w);
            if (second_topic[i] != topic) topic_pool[static_cast<std::size_t>(second_topic[i])].add(i, 0.5 * w);
        }
    }
    WeightedPool any_core;
    for (std::size_t i = 0; i < n_authors; ++i) {
        if (is_core[i]) any_core.add(i, 1.0);
    }

    // papers
    std::vector<PaperRecord> papers(n_papers);
    out.paper_topic.resize(n_papers);
    std::vector<std::vector<std::size_t>> topic_papers(static_cast<std::size_t>(n_topics));
    std::vector<std::vector<std::size_t>> paper_authors(n_papers);
    for (std::size_t p = 0; p < n_papers; ++p) {
        int topic = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(n_topics)));
        if (topic_pool[static_cast<std::size_t>(topic)].empty()) topic = out.author_topic[any_core.sample(rng)];
        out.paper_topic[p] = topic;
        topic_papers[static_cast<std::size_t>(topic)].push_back(p);
        auto& rec = papers[p];
        rec.paper_id = padded('P', p + 1, n_papers);
        rec.year = kFirstYear + static_cast<int>(std::floor((kLastYear - kFirstYear + 1) * std::pow(uniform01(rng), 0.6)));
        rec.year = std::min(rec.year, kLastYear);
        rec.venue = "Journal of " + capitalize(pick(vocab[static_cast<std::size_t>(topic)], rng)) + " " +
                    capitalize(pick(kGeneralWords, rng));
        rec.citation_count = static_cast<std::int64_t>(std::floor(std::min(1e5, std::pow(1.0 - uniform01(rng), -1.0 / 1.1) - 1.0)));
        rec.title = capitalize(topic_text(topic, 6 + uniform_index(rng, 4), 0.25));
        rec.abstract = capitalize(topic_text(topic, 40 + uniform_index(rng, 30), 0.3)) + ".";

        std::size_t team = 1;
        while (team < 15 && uniform01(rng) < 0.7) ++team;
        const auto& pool = topic_pool[static_cast<std::size_t>(topic)];
        auto& members = paper_authors[p];
        for (std::size_t attempt = 0; members.size() < team && attempt < 4 * team; ++attempt) {
            const std::size_t a = uniform01(rng) < 0.85 ? pool.sample(rng) : any_core.sample(rng);
            if (std::find(members.begin(), members.end(), a) == members.end()) members.push_back(a);
        }
    }

    // every core author gets two papers, one from 2020 on
    std::vector<std::vector<std::size_t>> author_papers(n_authors);
    for (std::size_t p = 0; p < n_papers; ++p) {
        for (auto a : paper_authors[p]) author_papers[a].push_back(p);
    }
    std::vector<std::vector<std::size_t>> recent_topic_papers(static_cast<std::size_t>(n_topics));
    for (std::size_t p = 0; p < n_papers; ++p) {
        if (papers[p].year >= 2020) recent_topic_papers[static_cast<std::size_t>(out.paper_topic[p])].push_back(p);
    }
    auto attach = [&](std::size_t a, std::size_t p) {
        auto& m = paper_authors[p];
        // join as a middle author so first/last positions stay with the original team
        m.insert(m.end() - (m.size() > 1 ? 1 : 0), a);
        author_papers[a].push_back(p);
    };
    for (std::size_t a = 0; a < n_authors; ++a) {
        if (!is_core[a]) continue;
        const auto topic = static_cast<std::size_t>(out.author_topic[a]);
        const bool has_recent = std::any_of(author_papers[a].begin(), author_papers[a].end(),
                                            [&](std::size_t p) { return papers[p].year >= 2020; });
        if (!has_recent) {
            const auto& cands = recent_topic_papers[topic].empty() ? topic_papers[topic] : recent_topic_papers[topic];
            std::size_t p = cands.empty() ? uniform_index(rng, n_papers) : pick(cands, rng);
            if (papers[p].year < 2020) papers[p].year = 2020 + static_cast<int>(uniform_index(rng, 6));
            if (std::find(paper_authors[p].begin(), paper_authors[p].end(), a) == paper_authors[p].end()) attach(a, p);
        }
        for (std::size_t guard = 0; author_papers[a].size() < 2 && guard < 50; ++guard) {
            const auto& cands = topic_papers[topic];
            const std::size_t p = cands.empty() ? uniform_index(rng, n_papers) : pick(cands, rng);
            if (std::find(paper_authors[p].begin(), paper_authors[p].end(), a) == paper_authors[p].end()) attach(a, p);
        }
    }
    // peripheral authors appear on exactly one paper
    for (std::size_t a = 0; a < n_authors; ++a) {
        if (is_core[a]) continue;
        const auto& cands = topic_papers[static_cast<std::size_t>(out.author_topic[a])];
        attach(a, cands.empty() ? uniform_index(rng, n_papers) : pick(cands, rng));
    }
    for (std::size_t p = 0; p < n_papers; ++p) {
        for (auto a : paper_authors[p]) papers[p].author_ids.push_back(authors[a].author_id);
    }

    // datasets: topic-matched usage, every dataset used at least once
    std::vector<DatasetRecord> datasets(n_datasets);
    out.dataset_topic.resize(n_datasets);
    std::vector<std::vector<std::size_t>> topic_datasets(static_cast<std::size_t>(n_topics));
    for (std::size_t d = 0; d < n_datasets; ++d) {
        const int topic = static_cast<int>(d % static_cast<std::size_t>(n_topics));
        out.dataset_topic[d] = topic;
        topic_datasets[static_cast<std::size_t>(topic)].push_back(d);
        auto& rec = datasets[d];
        rec.dataset_id = padded('D', d + 1, n_datasets);
        rec.name = capitalize(pick(vocab[static_cast<std::size_t>(topic)], rng)) + " " + pick(kDatasetNouns, rng) + " " +
                   std::to_string(d + 1);
        rec.description = "Shared resource on " + topic_text(topic, 8, 0.2) + ".";
    }
    std::vector<char> dataset_used(n_datasets, 0);
    for (std::size_t p = 0; p < n_papers; ++p) {
        const auto& ds = topic_datasets[static_cast<std::size_t>(out.paper_topic[p])];
        if (ds.empty() || uniform01(rng) >= 0.12) continue;
        const auto d = pick(ds, rng);
        papers[p].dataset_ids.push_back(datasets[d].dataset_id);
        dataset_used[d] = 1;
    }
    for (std::size_t d = 0; d < n_datasets; ++d) {
        if (dataset_used[d]) continue;
        const auto& cands = topic_papers[static_cast<std::size_t>(out.dataset_topic[d])];
        const std::size_t p = cands.empty() ? uniform_index(rng, n_papers) : pick(cands, rng);
        papers[p].dataset_ids.push_back(datasets[d].dataset_id);
    }

    // a few explicit career start years, never after the first paper
    std::vector<bool> given(n_authors, false);
    for (std::size_t a = 0; a < n_authors; ++a) {
        if (uniform01(rng) >= 0.1 || author_papers[a].empty()) continue;
        int first = kLastYear;
        for (auto p : author_papers[a]) first = std::min(first, papers[p].year);
        authors[a].career_start_year = first - static_cast<int>(uniform_index(rng, 6));
        given[a] = true;
    }

    // bio entities: half carry an embedding, the rest a fixed position
    std::vector<BioEntityRecord> bio(static_cast<std::size_t>(o.bio_entities));
    for (std::size_t b = 0; b < bio.size(); ++b) {
        auto& rec = bio[b];
        rec.entity_id = padded('B', b + 1, bio.size());
        const int topic = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(n_topics)));
        rec.name = "Gene " + to_lower_ascii(pick(vocab[static_cast<std::size_t>(topic)], rng)).substr(0, 4) + std::to_string(b + 1);
        for (auto& c : rec.name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (b % 2 == 0) {
            rec.embedding = pseudo_embed(topic_text(topic, 30, 0.2), o.dim, o.embed_seed);
        } else {
            rec.position = Point2{20.0 * uniform01(rng) - 10.0, 20.0 * uniform01(rng) - 10.0};
        }
    }

    out.corpus = Corpus::build(std::move(papers), std::move(authors), std::move(datasets), std::move(bio), std::move(given));
    if (o.write_paper_embeddings) {
        EmbeddingTable t(o.dim);
        for (const auto& p : out.corpus.papers()) t.add(p.paper_id, pseudo_embed(p.title + "\n" + p.abstract, o.dim, o.embed_seed));
        out.paper_embeddings = std::move(t);
    }
    return out;
}

void write_synthetic(const SyntheticCorpus& synth, const std::filesystem::path& dir) {
    save_corpus(synth.corpus, dir);
    if (synth.paper_embeddings) {
        write_embedding_table(*synth.paper_embeddings, dir / "embeddings.f32", dir / "embeddings.index.jsonl");
    }
}

}  // namespace tkg
