#include "tkg/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "tkg/errors.hpp"
#include "tkg/util.hpp"

namespace tkg {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxReportedIds = 20;

template <typename Rec, typename GetId>
std::unordered_map<std::string, std::size_t> index_records(const std::vector<Rec>& recs, GetId get_id,
                                                           const char* what) {
    std::unordered_map<std::string, std::size_t> idx;
    idx.reserve(recs.size());
    std::vector<std::string> dups;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const std::string& id = get_id(recs[i]);
        if (id.empty()) throw ValidationError(std::string("empty ") + what + " id at record " + std::to_string(i));
        if (!idx.emplace(id, i).second && dups.size() < kMaxReportedIds) dups.push_back(id);
    }
    if (!dups.empty()) {
        std::string msg = std::string("duplicate ") + what + " ids:";
        for (const auto& d : dups) msg += " " + d;
        throw ValidationError(msg);
    }
    return idx;
}

std::string join_ids(const std::vector<std::string>& ids) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ", ";
        out += ids[i];
    }
    return out;
}

template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
    const std::string fname = path.filename().string();
    std::ifstream in(path);
    if (!in) throw LoadError(fname + " not found");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            fn(json::parse(line));
        } catch (const json::exception& e) {
            throw LoadError(fname + ":" + std::to_string(lineno) + ": malformed record: " + e.what());
        }
    }
}

std::string opt_string(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return {};
    return it->get<std::string>();
}

}  // namespace

Corpus Corpus::build(std::vector<PaperRecord> papers, std::vector<AuthorRecord> authors,
                     std::vector<DatasetRecord> datasets, std::vector<BioEntityRecord> bio_entities,
                     std::vector<bool> career_start_given) {
    Corpus c;
    c.papers_ = std::move(papers);
    c.authors_ = std::move(authors);
    c.datasets_ = std::move(datasets);
    c.bio_entities_ = std::move(bio_entities);
    c.reindex();

    const int max_year = current_year();
    std::vector<std::string> dangling;
    auto note_dangling = [&](const std::string& id) {
        if (dangling.size() < kMaxReportedIds && std::find(dangling.begin(), dangling.end(), id) == dangling.end()) {
            dangling.push_back(id);
        }
    };
    for (const auto& p : c.papers_) {
        if (p.author_ids.empty()) throw ValidationError("paper " + p.paper_id + " has no authors");
        std::unordered_set<std::string_view> seen;
        for (const auto& a : p.author_ids) {
            if (!seen.insert(a).second) throw ValidationError("paper " + p.paper_id + " lists author " + a + " twice");
            if (!c.author_idx_.contains(a)) note_dangling(a);
        }
        for (const auto& d : p.dataset_ids) {
            if (!c.dataset_idx_.contains(d)) note_dangling(d);
        }
        if (p.year < 1900 || p.year > max_year) {
            throw ValidationError("paper " + p.paper_id + " has year " + std::to_string(p.year) + " outside [1900, " +
                                  std::to_string(max_year) + "]");
        }
        if (p.citation_count < 0) throw ValidationError("paper " + p.paper_id + " has negative citation_count");
    }
    if (!dangling.empty()) throw ValidationError("dangling id references: " + join_ids(dangling));

    for (const auto& b : c.bio_entities_) {
        if (!b.embedding && !b.position) {
            throw ValidationError("bio entity " + b.entity_id + " has neither embedding nor position");
        }
        if (b.embedding && !b.embedding->all_finite()) {
            throw ValidationError("bio entity " + b.entity_id + " has a non-finite embedding");
        }
    }

    c.derive();

    for (std::size_t i = 0; i < c.authors_.size(); ++i) {
        auto& a = c.authors_[i];
        const bool given = career_start_given.empty() ? a.career_start_year != 0 : career_start_given.at(i);
        int min_year = std::numeric_limits<int>::max();
        for (auto pi : c.author_papers_[i]) min_year = std::min(min_year, c.papers_[pi].year);
        const bool has_papers = !c.author_papers_[i].empty();
        if (!given) {
            a.career_start_year = has_papers ? min_year : 0;
        } else if (has_papers && a.career_start_year > min_year) {
            throw ValidationError("author " + a.author_id + " career_start_year " + std::to_string(a.career_start_year) +
                                  " is after first publication year " + std::to_string(min_year));
        }
    }
    return c;
}

void Corpus::reindex() {
    paper_idx_ = index_records(papers_, [](const PaperRecord& r) -> const std::string& { return r.paper_id; }, "paper");
    author_idx_ =
        index_records(authors_, [](const AuthorRecord& r) -> const std::string& { return r.author_id; }, "author");
    dataset_idx_ =
        index_records(datasets_, [](const DatasetRecord& r) -> const std::string& { return r.dataset_id; }, "dataset");
    bio_idx_ = index_records(bio_entities_, [](const BioEntityRecord& r) -> const std::string& { return r.entity_id; },
                             "bio entity");
}

void Corpus::derive() {
    author_papers_.assign(authors_.size(), {});
    std::vector<std::vector<std::string>> users(datasets_.size());
    for (std::size_t pi = 0; pi < papers_.size(); ++pi) {
        const auto& p = papers_[pi];
        for (const auto& a : p.author_ids) author_papers_[author_idx_.at(a)].push_back(pi);
        for (const auto& d : p.dataset_ids) users[dataset_idx_.at(d)].push_back(p.paper_id);
    }
    for (std::size_t i = 0; i < authors_.size(); ++i) {
        authors_[i].publication_count = static_cast<int>(author_papers_[i].size());
    }
    for (std::size_t i = 0; i < datasets_.size(); ++i) {
        auto& u = users[i];
        std::sort(u.begin(), u.end());
        u.erase(std::unique(u.begin(), u.end()), u.end());
        datasets_[i].user_paper_ids = std::move(u);
    }
}

std::optional<std::size_t> Corpus::paper_index(const std::string& id) const {
    auto it = paper_idx_.find(id);
    return it == paper_idx_.end() ? std::nullopt : std::optional<std::size_t>(it->second);
}
std::optional<std::size_t> Corpus::author_index(const std::string& id) const {
    auto it = author_idx_.find(id);
    return it == author_idx_.end() ? std::nullopt : std::optional<std::size_t>(it->second);
}
std::optional<std::size_t> Corpus::dataset_index(const std::string& id) const {
    auto it = dataset_idx_.find(id);
    return it == dataset_idx_.end() ? std::nullopt : std::optional<std::size_t>(it->second);
}
std::optional<std::size_t> Corpus::bio_entity_index(const std::string& id) const {
    auto it = bio_idx_.find(id);
    return it == bio_idx_.end() ? std::nullopt : std::optional<std::size_t>(it->second);
}

const PaperRecord& Corpus::paper(const std::string& id) const {
    auto i = paper_index(id);
    if (!i) throw NotFoundError("unknown paper id " + id);
    return papers_[*i];
}
const AuthorRecord& Corpus::author(const std::string& id) const {
    auto i = author_index(id);
    if (!i) throw NotFoundError("unknown author id " + id);
    return authors_[*i];
}
const DatasetRecord& Corpus::dataset(const std::string& id) const {
    auto i = dataset_index(id);
    if (!i) throw NotFoundError("unknown dataset id " + id);
    return datasets_[*i];
}

std::span<const std::size_t> Corpus::papers_of(const std::string& author_id) const {
    auto i = author_index(author_id);
    if (!i) throw NotFoundError("unknown author id " + author_id);
    return author_papers_[*i];
}

std::size_t Corpus::retained_author_count() const {
    return static_cast<std::size_t>(
        std::count_if(authors_.begin(), authors_.end(), [](const AuthorRecord& a) { return !a.external; }));
}

Corpus derive_inverses(const Corpus& corpus) {
    Corpus c = corpus;
    c.derive();
    return c;
}

Corpus filter_authors(const Corpus& corpus, int min_pubs, int active_since) {
    Corpus c = derive_inverses(corpus);
    for (std::size_t i = 0; i < c.authors_.size(); ++i) {
        auto& a = c.authors_[i];
        if (a.external) continue;
        int latest = std::numeric_limits<int>::min();
        for (auto pi : c.author_papers_[i]) latest = std::max(latest, c.papers_[pi].year);
        const bool keep = a.publication_count >= min_pubs && latest >= active_since;
        if (!keep) a.external = true;
    }
    return c;
}

Corpus load_corpus(const std::filesystem::path& dir) {
    const auto papers_path = dir / "papers.jsonl";
    const auto authors_path = dir / "authors.jsonl";
    const auto datasets_path = dir / "datasets.jsonl";
    for (const auto& p : {papers_path, authors_path, datasets_path}) {
        if (!std::filesystem::exists(p)) throw LoadError(p.filename().string() + " not found");
    }

    std::vector<PaperRecord> papers;
    for_each_jsonl(papers_path, [&](const json& j) {
        PaperRecord p;
        p.paper_id = j.at("paper_id").get<std::string>();
        p.title = j.at("title").get<std::string>();
        p.abstract = opt_string(j, "abstract");
        p.year = j.at("year").get<int>();
        p.venue = opt_string(j, "venue");
        p.citation_count = j.value("citation_count", std::int64_t{0});
        p.author_ids = j.at("author_ids").get<std::vector<std::string>>();
        if (j.contains("dataset_ids")) p.dataset_ids = j.at("dataset_ids").get<std::vector<std::string>>();
        papers.push_back(std::move(p));
    });

    std::vector<AuthorRecord> authors;
    std::vector<bool> given;
    for_each_jsonl(authors_path, [&](const json& j) {
        AuthorRecord a;
        a.author_id = j.at("author_id").get<std::string>();
        a.name = j.at("name").get<std::string>();
        a.affiliation = opt_string(j, "affiliation");
        auto it = j.find("career_start_year");
        const bool has_start = it != j.end() && !it->is_null();
        if (has_start) a.career_start_year = it->get<int>();
        a.external = j.value("external", false);
        authors.push_back(std::move(a));
        given.push_back(has_start);
    });

    std::vector<DatasetRecord> datasets;
    for_each_jsonl(datasets_path, [&](const json& j) {
        DatasetRecord d;
        d.dataset_id = j.at("dataset_id").get<std::string>();
        d.name = j.at("name").get<std::string>();
        d.description = opt_string(j, "description");
        datasets.push_back(std::move(d));
    });

    std::vector<BioEntityRecord> bio;
    const auto bio_path = dir / "bio_entities.jsonl";
    if (std::filesystem::exists(bio_path)) {
        for_each_jsonl(bio_path, [&](const json& j) {
            BioEntityRecord b;
            b.entity_id = j.at("entity_id").get<std::string>();
            b.name = j.at("name").get<std::string>();
            if (auto it = j.find("embedding"); it != j.end() && !it->is_null()) {
                b.embedding = EmbeddingVector(it->get<std::vector<float>>());
            }
            auto x = j.find("x");
            auto y = j.find("y");
            if (x != j.end() && y != j.end() && !x->is_null() && !y->is_null()) {
                b.position = Point2{x->get<double>(), y->get<double>()};
            }
            bio.push_back(std::move(b));
        });
    }

    return Corpus::build(std::move(papers), std::move(authors), std::move(datasets), std::move(bio), std::move(given));
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "papers.jsonl", std::ios::trunc);
        for (const auto& p : corpus.papers()) {
            json j = {{"paper_id", p.paper_id},     {"title", p.title},           {"abstract", p.abstract},
                      {"year", p.year},             {"venue", p.venue},           {"citation_count", p.citation_count},
                      {"author_ids", p.author_ids}, {"dataset_ids", p.dataset_ids}};
            out << j.dump() << '\n';
        }
    }
    {
        std::ofstream out(dir / "authors.jsonl", std::ios::trunc);
        for (const auto& a : corpus.authors()) {
            json j = {{"author_id", a.author_id}, {"name", a.name}, {"affiliation", a.affiliation}};
            j["career_start_year"] = a.career_start_year != 0 ? json(a.career_start_year) : json(nullptr);
            if (a.external) j["external"] = true;
            out << j.dump() << '\n';
        }
    }
    {
        std::ofstream out(dir / "datasets.jsonl", std::ios::trunc);
        for (const auto& d : corpus.datasets()) {
            out << json{{"dataset_id", d.dataset_id}, {"name", d.name}, {"description", d.description}}.dump() << '\n';
        }
    }
    if (!corpus.bio_entities().empty()) {
        std::ofstream out(dir / "bio_entities.jsonl", std::ios::trunc);
        for (const auto& b : corpus.bio_entities()) {
            json j = {{"entity_id", b.entity_id}, {"name", b.name}};
            if (b.embedding) {
                auto vals = b.embedding->values();
                j["embedding"] = std::vector<float>(vals.begin(), vals.end());
            }
            if (b.position) {
                j["x"] = b.position->x;
                j["y"] = b.position->y;
            }
            out << j.dump() << '\n';
        }
    }
}

std::optional<EmbeddingTable> load_paper_embeddings(const std::filesystem::path& dir) {
    const auto m = dir / "embeddings.f32";
    if (!std::filesystem::exists(m)) return std::nullopt;
    return read_embedding_table(m, dir / "embeddings.index.jsonl");
}

}  // namespace tkg
