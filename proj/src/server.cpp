#include "tkg/server.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <limits>

#include <spdlog/spdlog.h>

#include "httplib.h"
#include "tkg/errors.hpp"
#include "tkg/util.hpp"

using nlohmann::json;

namespace tkg {

// ---- spatial index ----

SpatialIndex::SpatialIndex(const std::vector<NodeView>& nodes, std::size_t leaf_capacity, int max_depth)
    : nodes_(&nodes), leaf_capacity_(std::max<std::size_t>(1, leaf_capacity)), max_depth_(max_depth) {
    order_.resize(nodes.size());
    for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
    if (nodes.empty()) return;
    bounds_ = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
               -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& n : nodes) {
        bounds_.x_min = std::min(bounds_.x_min, n.x);
        bounds_.y_min = std::min(bounds_.y_min, n.y);
        bounds_.x_max = std::max(bounds_.x_max, n.x);
        bounds_.y_max = std::max(bounds_.y_max, n.y);
    }
    Cell root;
    root.box = bounds_;
    root.begin = 0;
    root.end = static_cast<std::uint32_t>(order_.size());
    cells_.push_back(root);
    split(0, 0);
}

void SpatialIndex::split(std::int32_t ci, int depth) {
    const auto& nodes = *nodes_;
    auto best_of = [&](std::uint32_t a, std::uint32_t b) { return node_display_before(nodes[a], nodes[b]) ? a : b; };
    Cell cell = cells_[static_cast<std::size_t>(ci)];
    if (cell.count() <= leaf_capacity_ || depth >= max_depth_) {
        std::uint32_t rep = order_[cell.begin];
        for (auto k = cell.begin + 1; k < cell.end; ++k) rep = best_of(rep, order_[k]);
        cells_[static_cast<std::size_t>(ci)].representative = rep;
        return;
    }
    const double mx = 0.5 * (cell.box.x_min + cell.box.x_max);
    const double my = 0.5 * (cell.box.y_min + cell.box.y_max);
    auto quadrant = [&](std::uint32_t i) { return (nodes[i].x >= mx ? 1 : 0) + (nodes[i].y >= my ? 2 : 0); };
    auto first = order_.begin() + cell.begin;
    auto last = order_.begin() + cell.end;
    // stable three-way partition keeps the build deterministic
    auto m2 = std::stable_partition(first, last, [&](std::uint32_t i) { return quadrant(i) < 2; });
    auto m1 = std::stable_partition(first, m2, [&](std::uint32_t i) { return quadrant(i) == 0; });
    auto m3 = std::stable_partition(m2, last, [&](std::uint32_t i) { return quadrant(i) == 2; });
    const std::uint32_t bounds[5] = {cell.begin, static_cast<std::uint32_t>(m1 - order_.begin()),
                                     static_cast<std::uint32_t>(m2 - order_.begin()),
                                     static_cast<std::uint32_t>(m3 - order_.begin()), cell.end};
    const BBox boxes[4] = {{cell.box.x_min, cell.box.y_min, mx, my},
                           {mx, cell.box.y_min, cell.box.x_max, my},
                           {cell.box.x_min, my, mx, cell.box.y_max},
                           {mx, my, cell.box.x_max, cell.box.y_max}};
    std::uint32_t rep = order_[cell.begin];
    for (int q = 0; q < 4; ++q) {
        Cell child;
        child.box = boxes[q];
        child.begin = bounds[q];
        child.end = bounds[q + 1];
        const auto child_index = static_cast<std::int32_t>(cells_.size());
        cells_.push_back(child);
        cells_[static_cast<std::size_t>(ci)].children[q] = child_index;
        if (child.count() > 0) {
            split(child_index, depth + 1);
            rep = best_of(rep, cells_[static_cast<std::size_t>(child_index)].representative);
        }
    }
    cells_[static_cast<std::size_t>(ci)].representative = rep;
}

void SpatialIndex::query(const BBox& box, std::vector<std::uint32_t>& out) const {
    if (cells_.empty()) return;
    std::vector<std::int32_t> stack{0};
    const auto& nodes = *nodes_;
    while (!stack.empty()) {
        const auto& c = cells_[static_cast<std::size_t>(stack.back())];
        stack.pop_back();
        if (c.count() == 0 || !box.intersects(c.box)) continue;
        if (box.covers(c.box)) {
            out.insert(out.end(), order_.begin() + c.begin, order_.begin() + c.end);
        } else if (c.leaf()) {
            for (auto k = c.begin; k < c.end; ++k) {
                const auto i = order_[k];
                if (box.contains(nodes[i].x, nodes[i].y)) out.push_back(i);
            }
        } else {
            for (int q = 3; q >= 0; --q) stack.push_back(c.children[q]);
        }
    }
}

bool node_display_before(const NodeView& a, const NodeView& b) {
    if (a.size != b.size) return a.size > b.size;
    return a.node_id < b.node_id;
}

// ---- helpers ----

namespace {

std::optional<std::string> param(const QueryParams& params, const std::string& key) {
    auto it = params.find(key);
    if (it == params.end()) return std::nullopt;
    return it->second;
}

template <typename T>
std::optional<T> number_param(const QueryParams& params, const std::string& key) {
    auto v = param(params, key);
    if (!v || v->empty()) return std::nullopt;
    T out{};
    const auto* end = v->data() + v->size();
    auto [ptr, ec] = std::from_chars(v->data(), end, out);
    if (ec != std::errc() || ptr != end) throw ValidationError("bad numeric value for " + key + ": " + *v);
    return out;
}

std::optional<std::set<NodeKind>> kinds_param(const QueryParams& params) {
    auto v = param(params, "kinds");
    if (!v || v->empty()) return std::nullopt;
    std::set<NodeKind> kinds;
    std::size_t pos = 0;
    while (pos <= v->size()) {
        auto comma = v->find(',', pos);
        if (comma == std::string::npos) comma = v->size();
        const auto token = v->substr(pos, comma - pos);
        if (!token.empty()) {
            auto k = parse_node_kind(token);
            if (!k) throw ValidationError("unknown node kind: " + token);
            kinds.insert(*k);
        }
        pos = comma + 1;
    }
    return kinds;
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (pos < path.size()) {
        auto slash = path.find('/', pos);
        if (slash == std::string::npos) slash = path.size();
        if (slash > pos) parts.push_back(path.substr(pos, slash - pos));
        pos = slash + 1;
    }
    return parts;
}

json error_body(const std::string& code, const std::string& message) {
    return {{"error", {{"code", code}, {"message", message}}}};
}

class RouteNotFound : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};
class MethodNotAllowed : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace

struct ApiService::Counting : LlmClient {
    explicit Counting(std::shared_ptr<LlmClient> c) : inner(std::move(c)) {}
    std::string complete(std::string_view prompt, const CompletionParams& params) override {
        calls.fetch_add(1);
        return inner->complete(prompt, params);
    }
    std::string name() const override { return inner->name(); }
    bool is_mock() const override { return inner->is_mock(); }

    std::shared_ptr<LlmClient> inner;
    std::atomic<std::size_t> calls{0};
};

ApiService::ApiService(std::shared_ptr<const Snapshot> snapshot, ServiceOptions options)
    : snapshot_(std::move(snapshot)), options_(std::move(options)), spatial_(snapshot_->nodes) {
    if (!options_.clock) options_.clock = system_clock_ms();
    if (options_.backbone) counting_a_ = std::make_shared<Counting>(options_.backbone);
    if (options_.backbone_b) counting_b_ = std::make_shared<Counting>(options_.backbone_b);
    if (options_.state_dir.empty()) {
        cache_ = std::make_unique<JustificationCache>();
        sessions_ = std::make_unique<SessionStore>(":memory:");
    } else {
        std::filesystem::create_directories(options_.state_dir);
        cache_ = std::make_unique<JustificationCache>(options_.state_dir / "justifications.sqlite");
        sessions_ = std::make_unique<SessionStore>(options_.state_dir / "sessions.sqlite");
    }

    const auto& corpus = snapshot_->corpus;
    const auto& nodes = snapshot_->nodes;
    names_.resize(nodes.size());
    names_lower_.resize(nodes.size());
    for (std::uint32_t i = 0; i < nodes.size(); ++i) {
        node_index_.emplace(nodes[i].node_id, i);
        switch (nodes[i].kind) {
            case NodeKind::author: names_[i] = corpus.author(nodes[i].node_id).name; break;
            case NodeKind::dataset: names_[i] = corpus.dataset(nodes[i].node_id).name; break;
            case NodeKind::bio_entity:
                names_[i] = corpus.bio_entities()[*corpus.bio_entity_index(nodes[i].node_id)].name;
                break;
        }
        names_lower_[i] = to_lower_ascii(names_[i]);
    }
    view_text_.reserve(nodes.size());
    for (std::uint32_t i = 0; i < nodes.size(); ++i) view_text_.push_back(view_json(i).dump());
}

ApiService::~ApiService() = default;

std::size_t ApiService::llm_calls() const {
    return (counting_a_ ? counting_a_->calls.load() : 0) + (counting_b_ ? counting_b_->calls.load() : 0);
}

std::string ApiService::node_name(const std::string& id) const {
    if (auto it = node_index_.find(id); it != node_index_.end()) return names_[it->second];
    if (auto a = snapshot_->corpus.author_index(id)) return snapshot_->corpus.authors()[*a].name;
    return id;
}

json ApiService::view_json(std::uint32_t i) const {
    const auto& v = snapshot_->nodes[i];
    json j = {{"id", v.node_id},
              {"kind", to_string(v.kind)},
              {"shape", shape_of(v.kind) == NodeShape::circle ? "circle" : "square"},
              {"name", names_[i]},
              {"x", v.x},
              {"y", v.y},
              {"size", v.size},
              {"publication_count", v.publication_count},
              {"career_start_year", nullptr}};
    if (v.career_start_year) j["career_start_year"] = *v.career_start_year;
    return j;
}

ViewportResult ApiService::query_viewport(const ViewportQuery& q) const {
    const auto& b = q.box;
    if (!(std::isfinite(b.x_min) && std::isfinite(b.y_min) && std::isfinite(b.x_max) && std::isfinite(b.y_max)) ||
        !(b.x_min < b.x_max) || !(b.y_min < b.y_max)) {
        throw ValidationError("degenerate bounding box");
    }
    const auto hard_cap = static_cast<std::size_t>(options_.config.viewport_hard_cap);
    if (q.limit == 0 || q.limit > hard_cap) {
        throw ValidationError("limit must be between 1 and " + std::to_string(hard_cap));
    }
    const auto& nodes = snapshot_->nodes;
    std::vector<std::uint32_t> hits;
    spatial_.query(b, hits);
    const bool filtered = q.kinds || q.pubs_min || q.pubs_max || q.career_min || q.career_max;
    if (filtered) {
        std::erase_if(hits, [&](std::uint32_t i) {
            const auto& v = nodes[i];
            if (q.kinds && !q.kinds->count(v.kind)) return true;
            if (q.pubs_min && v.publication_count < *q.pubs_min) return true;
            if (q.pubs_max && v.publication_count > *q.pubs_max) return true;
            if (q.career_min || q.career_max) {
                if (!v.career_start_year) return true;
                if (q.career_min && *v.career_start_year < *q.career_min) return true;
                if (q.career_max && *v.career_start_year > *q.career_max) return true;
            }
            return false;
        });
    }
    ViewportResult r;
    r.total_matched = hits.size();
    auto before = [&](std::uint32_t a, std::uint32_t c) { return node_display_before(nodes[a], nodes[c]); };
    if (hits.size() > q.limit) {
        std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(q.limit), hits.end(), before);
        hits.resize(q.limit);
        r.decimated = true;
    } else {
        std::sort(hits.begin(), hits.end(), before);
    }
    r.nodes = std::move(hits);
    return r;
}

std::vector<std::uint32_t> ApiService::search_nodes(const std::string& query,
                                                    const std::optional<std::set<NodeKind>>& kinds,
                                                    std::size_t limit) const {
    std::string q = to_lower_ascii(query);
    const auto b = q.find_first_not_of(" \t");
    if (b == std::string::npos || limit == 0) return {};
    q = q.substr(b, q.find_last_not_of(" \t") - b + 1);
    const std::set<NodeKind> allowed = kinds ? *kinds : std::set<NodeKind>{NodeKind::author, NodeKind::dataset};
    const auto& nodes = snapshot_->nodes;
    struct Hit {
        std::size_t pos;
        int pubs;
        std::uint32_t node;
    };
    std::vector<Hit> hits;
    for (std::uint32_t i = 0; i < nodes.size(); ++i) {
        if (!allowed.count(nodes[i].kind)) continue;
        const auto pos = names_lower_[i].find(q);
        if (pos != std::string::npos) hits.push_back({pos, nodes[i].publication_count, i});
    }
    auto before = [&](const Hit& x, const Hit& y) {
        if (x.pos != y.pos) return x.pos < y.pos;
        if (x.pubs != y.pubs) return x.pubs > y.pubs;
        return nodes[x.node].node_id < nodes[y.node].node_id;
    };
    const auto n = std::min(limit, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(n), hits.end(), before);
    std::vector<std::uint32_t> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(hits[i].node);
    return out;
}

json ApiService::node_payload(const std::string& id) const {
    auto it = node_index_.find(id);
    if (it == node_index_.end()) throw NotFoundError("unknown node: " + id);
    const auto& v = snapshot_->nodes[it->second];
    const auto& corpus = snapshot_->corpus;
    json j = view_json(it->second);
    j["detail_url"] = "/api/v1/node/" + id + "/detail";
    switch (v.kind) {
        case NodeKind::author: {
            const auto& a = corpus.author(id);
            j["affiliation"] = a.affiliation;
            j["has_embedding"] = snapshot_->author_index.find(id).has_value();
            break;
        }
        case NodeKind::dataset: {
            const auto& d = corpus.dataset(id);
            std::set<std::string> users;
            for (const auto& pid : d.user_paper_ids) {
                for (const auto& aid : corpus.paper(pid).author_ids) users.insert(aid);
            }
            j["description"] = d.description;
            j["user_paper_count"] = d.user_paper_ids.size();
            j["user_count"] = users.size();
            j["has_embedding"] = snapshot_->dataset_embeddings.contains(id);
            break;
        }
        case NodeKind::bio_entity: {
            const auto& b = corpus.bio_entities()[*corpus.bio_entity_index(id)];
            j["has_embedding"] = b.embedding.has_value();
            j["stored_position"] = b.position.has_value();
            break;
        }
    }
    return j;
}

json ApiService::node_detail(const std::string& id) const {
    json j = node_payload(id);
    const auto& corpus = snapshot_->corpus;
    const auto kind = snapshot_->nodes[node_index_.at(id)].kind;
    if (kind == NodeKind::author) {
        std::vector<const PaperRecord*> papers;
        for (auto idx : corpus.papers_of(id)) papers.push_back(&corpus.papers()[idx]);
        std::sort(papers.begin(), papers.end(), [](const PaperRecord* a, const PaperRecord* b) {
            if (a->year != b->year) return a->year > b->year;
            return a->paper_id < b->paper_id;
        });
        json arr = json::array();
        for (const auto* p : papers) {
            const auto pos = std::find(p->author_ids.begin(), p->author_ids.end(), id) - p->author_ids.begin() + 1;
            arr.push_back({{"paper_id", p->paper_id},
                           {"title", p->title},
                           {"year", p->year},
                           {"venue", p->venue},
                           {"citation_count", p->citation_count},
                           {"author_position", pos},
                           {"author_count", p->author_ids.size()},
                           {"dataset_ids", p->dataset_ids}});
        }
        j["papers"] = arr;
        json facets = json::array();
        if (auto it = snapshot_->facets.find(id); it != snapshot_->facets.end()) {
            for (const auto& f : it->second) facets.push_back({{"paper_ids", f.paper_ids}, {"weight", f.weight}});
        }
        j["facets"] = facets;
        j["coauthor_count"] = snapshot_->graph.contains(id) ? collaborator_set(snapshot_->graph, id).size() : 0;
    } else if (kind == NodeKind::dataset) {
        json arr = json::array();
        for (const auto& pid : corpus.dataset(id).user_paper_ids) {
            const auto& p = corpus.paper(pid);
            arr.push_back({{"paper_id", p.paper_id}, {"title", p.title}, {"year", p.year}, {"author_ids", p.author_ids}});
        }
        j["user_papers"] = arr;
    } else {
        const auto& b = corpus.bio_entities()[*corpus.bio_entity_index(id)];
        if (b.position) j["position"] = {{"x", b.position->x}, {"y", b.position->y}};
    }
    return j;
}

json ApiService::recommendations(const std::string& id, const std::string& kind_param, const std::string& why) {
    auto it = node_index_.find(id);
    if (it == node_index_.end()) throw NotFoundError("unknown node: " + id);
    const auto node_kind = snapshot_->nodes[it->second].kind;
    std::string kind = kind_param;
    if (kind.empty()) kind = node_kind == NodeKind::dataset ? "dataset_users" : "collaborators";
    if (kind != "collaborators" && kind != "dataset_users") {
        throw ValidationError("kind must be collaborators or dataset_users");
    }
    if ((kind == "collaborators") != (node_kind == NodeKind::author) ||
        (kind == "dataset_users" && node_kind != NodeKind::dataset)) {
        throw ValidationError(kind + " recommendations are not defined for " + std::string(to_string(node_kind)) +
                              " nodes");
    }
    const auto& snap = *snapshot_;
    const auto& cfg = snap.config;
    std::vector<Recommendation> recs;
    const auto& table = kind == "collaborators" ? snap.collaborator_recs : snap.dataset_recs;
    if (auto r = table.find(id); r != table.end()) {
        recs = r->second;
    } else if (kind == "collaborators" && snap.author_index.find(id)) {
        recs = top_k_collaborators(id, snap.author_index, snap.graph, cfg.collab_k, cfg.exclusion_depth);
    } else if (kind == "dataset_users" && snap.dataset_embeddings.contains(id)) {
        recs = top_k_dataset_users(id, snap.author_index, snap.dataset_embeddings, snap.corpus, cfg.dataset_k);
    }

    json items = json::array();
    const Recommendation* why_rec = nullptr;
    for (const auto& r : recs) {
        items.push_back({{"candidate_id", r.candidate_id},
                         {"name", node_name(r.candidate_id)},
                         {"affiliation", snap.corpus.author(r.candidate_id).affiliation},
                         {"score", r.score},
                         {"rank", r.rank}});
        if (r.candidate_id == why) why_rec = &r;
    }
    json j = {{"node_id", id}, {"kind", kind}, {"count", recs.size()}, {"items", items}};
    if (!why.empty()) {
        if (!why_rec) throw NotFoundError(why + " is not among the recommendations for " + id);
        if (!counting_a_) throw LlmTransportError("no LLM backbone is configured");
        JustifyRequest req{kind == "collaborators" ? JustifyKind::collaborator : JustifyKind::dataset, id,
                           why_rec->candidate_id, why_rec->score};
        const bool cached = cache_->get(justification_cache_key(req, counting_a_->name())).has_value();
        CompletionParams params;
        params.seed = options_.config.seed;
        const auto text = justify_recommendation(req, snap.corpus, *counting_a_, cache_.get(), params);
        j["justification"] = {{"candidate_id", why_rec->candidate_id}, {"text", text}, {"cached", cached}};
    }
    return j;
}

json ApiService::collaborators(const std::string& id) const {
    if (!snapshot_->graph.contains(id)) throw NotFoundError("unknown author: " + id);
    const auto ids = collaborator_set(snapshot_->graph, id);
    return {{"author_id", id}, {"count", ids.size()}, {"collaborators", ids}};
}

json ApiService::path(const std::string& from, const std::string& to) const {
    const auto& g = snapshot_->graph;
    if (!g.contains(from)) throw NotFoundError("unknown author: " + from);
    if (!g.contains(to)) throw NotFoundError("unknown author: " + to);
    const int cap = options_.config.path_depth_cap;
    const auto res = shortest_path(g, from, to, cap);
    json j = {{"from", from}, {"to", to}, {"depth_cap", cap}, {"found", res.path.has_value()},
              {"beyond_cap", res.beyond_cap}, {"distance", nullptr}, {"path", json::array()}};
    if (res.path) {
        j["distance"] = *res.distance();
        for (const auto& id : *res.path) j["path"].push_back({{"id", id}, {"name", node_name(id)}});
    } else {
        j["message"] = "no path within depth cap";
    }
    return j;
}

std::mutex& ApiService::session_mutex(const std::string& session_id) {
    std::lock_guard lock(locks_mu_);
    auto& m = session_locks_[session_id];
    if (!m) m = std::make_unique<std::mutex>();
    return *m;
}

json ApiService::post_message(const std::string& session_id, const json& body) {
    if (!body.is_object()) throw ValidationError("request body must be a JSON object");
    const auto message = body.value("message", std::string());
    const bool ab = body.value("ab", false);
    std::optional<std::string> seed_paper;
    if (auto it = body.find("seed_paper_id"); it != body.end() && it->is_string()) seed_paper = it->get<std::string>();
    if (!counting_a_) throw LlmTransportError("no LLM backbone is configured");

    std::lock_guard turn_lock(session_mutex(session_id));
    std::optional<ChatSession> existing;
    {
        std::lock_guard lock(sessions_mu_);
        existing = sessions_->load(session_id);
    }
    ChatSession session;
    if (existing) {
        session = std::move(*existing);
    } else {
        session.session_id = session_id;
        session.seed = fnv1a64(session_id, options_.config.seed);
        if (auto it = body.find("author_id"); it != body.end() && it->is_string()) {
            const auto author = it->get<std::string>();
            if (!snapshot_->graph.contains(author)) throw NotFoundError("unknown author: " + author);
            session.author_id = author;
        }
    }

    TeamingDeps deps;
    deps.corpus = &snapshot_->corpus;
    deps.graph = &snapshot_->graph;
    deps.author_index = &snapshot_->author_index;
    deps.facets = &snapshot_->facets;
    deps.embed = make_pseudo_embedder(snapshot_->author_index.dim(), snapshot_->config.embed_seed);
    deps.backbone = counting_a_.get();
    deps.backbone_b = counting_b_.get();
    deps.clock = options_.clock;
    deps.options.pool = options_.config.rerank_pool;
    deps.options.rerank.top_n = options_.config.rerank_top_n;
    deps.options.rerank.parallelism = options_.config.rerank_parallelism;
    deps.options.rerank.path_depth_cap = options_.config.path_depth_cap;

    const auto turn = run_teaming_chat(session, {message, ab, seed_paper}, deps);
    {
        std::lock_guard lock(sessions_mu_);
        sessions_->save(session);
    }

    json j = {{"session_id", session_id},
              {"ok", turn.ok},
              {"history_length", session.history.size()},
              {"reply", session.history.back().text},
              {"gap", nullptr},
              {"candidates", json::array()},
              {"ab", nullptr},
              {"dropped", turn.dropped}};
    if (!turn.ok) j["error"] = turn.error;
    if (turn.gap) j["gap"] = {{"query_text", turn.gap->query_text}, {"thoughts", turn.gap->thoughts}};
    for (const auto& c : turn.ranked) j["candidates"].push_back(to_json(c));
    if (turn.ab) {
        json a = json::array(), b = json::array();
        for (const auto& c : turn.ab->list_a) a.push_back(to_json(c));
        for (const auto& c : turn.ab->list_b) b.push_back(to_json(c));
        j["ab"] = {{"A", a}, {"B", b}};
    }
    return j;
}

json ApiService::post_feedback(const std::string& session_id, const json& body) {
    if (!body.is_object() || !body.contains("preferred") || !body["preferred"].is_string()) {
        throw ValidationError("body must carry \"preferred\": \"A\" or \"B\"");
    }
    std::lock_guard turn_lock(session_mutex(session_id));
    std::lock_guard lock(sessions_mu_);
    auto session = sessions_->load(session_id);
    if (!session) throw NotFoundError("unknown session: " + session_id);
    const auto preferred = body["preferred"].get<std::string>();
    if (preferred != "A" && preferred != "B") throw ValidationError("preferred must be A or B");
    record_vote(*session, preferred, options_.clock());
    sessions_->save(*session);
    const auto& ab = *session->ab;
    return {{"session_id", session_id},
            {"preferred", preferred},
            {"backbone", preferred == "A" ? ab.backbone_a : ab.backbone_b},
            {"revotes", ab.audit.size()}};
}

json ApiService::session_dump(const std::string& session_id) const {
    std::lock_guard lock(sessions_mu_);
    auto session = sessions_->load(session_id);
    if (!session) throw NotFoundError("unknown session: " + session_id);
    return session_to_json(*session);
}

json ApiService::meta() const {
    const auto& s = *snapshot_;
    json layout = {{"method", to_string(s.config.layout_method)}};
    for (const auto& st : s.manifest.stages) {
        if (st.name == "layout" && st.info.contains("trustworthiness_k10")) layout["trustworthiness_k10"] = st.info["trustworthiness_k10"];
    }
    return {{"snapshot_version", s.manifest.snapshot_version},
            {"counts",
             {{"authors", s.corpus.retained_author_count()},
              {"external_authors", s.corpus.authors().size() - s.corpus.retained_author_count()},
              {"papers", s.corpus.papers().size()},
              {"datasets", s.corpus.datasets().size()},
              {"bio_entities", s.corpus.bio_entities().size()},
              {"nodes", s.nodes.size()},
              {"edges", s.graph.edge_count()}}},
            {"layout", layout},
            {"embedding_dim", s.author_index.dim()},
            {"index_version", s.author_index.version()},
            {"llm",
             {{"backbone", counting_a_ ? json(counting_a_->name()) : json(nullptr)},
              {"ab_available", counting_b_ != nullptr}}}};
}

json ApiService::health() const {
    return {{"status", "ok"}, {"snapshot_version", snapshot_->manifest.snapshot_version}};
}

ApiResponse ApiService::handle(const std::string& method, const std::string& path_str, const QueryParams& params,
                               const std::string& body) {
    try {
        static const std::string kPrefix = "/api/v1/";
        if (path_str.rfind(kPrefix, 0) != 0) throw RouteNotFound(path_str);
        const auto seg = split_path(path_str.substr(kPrefix.size()));
        auto require = [&](const char* m) {
            if (method != m) throw MethodNotAllowed(method + " " + path_str);
        };
        auto parse_body = [&] {
            try {
                return body.empty() ? json::object() : json::parse(body);
            } catch (const json::exception&) {
                throw ValidationError("request body is not valid JSON");
            }
        };
        if (seg.size() == 1 && seg[0] == "healthz") return (require("GET"), ApiResponse{200, health()});
        if (seg.size() == 1 && seg[0] == "meta") return (require("GET"), ApiResponse{200, meta()});
        if (seg.size() == 1 && seg[0] == "nodes") {
            require("GET");
            ViewportQuery q;
            if (auto bbox = param(params, "bbox"); bbox && !bbox->empty()) {
                double v[4];
                std::size_t pos = 0;
                for (int i = 0; i < 4; ++i) {
                    auto comma = bbox->find(',', pos);
                    if ((i < 3) != (comma != std::string::npos)) throw ValidationError("bbox must be x_min,y_min,x_max,y_max");
                    const auto tok = bbox->substr(pos, (i < 3 ? comma : bbox->size()) - pos);
                    const auto* end = tok.data() + tok.size();
                    auto [ptr, ec] = std::from_chars(tok.data(), end, v[i]);
                    if (tok.empty() || ec != std::errc() || ptr != end) throw ValidationError("bad bbox value: " + tok);
                    pos = comma + 1;
                }
                q.box = {v[0], v[1], v[2], v[3]};
            } else {
                const auto& b = spatial_.bounds();
                q.box = {b.x_min - 1.0, b.y_min - 1.0, b.x_max + 1.0, b.y_max + 1.0};
            }
            q.zoom = number_param<double>(params, "zoom").value_or(0.0);
            q.kinds = kinds_param(params);
            q.pubs_min = number_param<int>(params, "pubs_min");
            q.pubs_max = number_param<int>(params, "pubs_max");
            q.career_min = number_param<int>(params, "career_min");
            q.career_max = number_param<int>(params, "career_max");
            const auto limit = number_param<long long>(params, "limit").value_or(options_.config.viewport_limit);
            if (limit <= 0) throw ValidationError("limit must be positive");
            q.limit = static_cast<std::size_t>(limit);
            const auto r = query_viewport(q);
            // Same bytes as dumping the json object (keys sorted), spliced from cached node fragments.
            const json head = {{"decimated", r.decimated}, {"limit", q.limit}};
            const json tail = {{"returned", r.nodes.size()}, {"total_matched", r.total_matched}, {"zoom", q.zoom}};
            std::size_t bytes = 128;
            for (auto i : r.nodes) bytes += view_text_[i].size() + 1;
            ApiResponse res;
            res.body = nullptr;
            res.text.reserve(bytes);
            res.text = head.dump();
            res.text.back() = ',';
            res.text += "\"nodes\":[";
            for (std::size_t k = 0; k < r.nodes.size(); ++k) {
                if (k) res.text += ',';
                res.text += view_text_[r.nodes[k]];
            }
            res.text += "],";
            res.text += tail.dump().substr(1);
            return res;
        }
        if (seg.size() == 1 && seg[0] == "search") {
            require("GET");
            const auto query = param(params, "q").value_or("");
            const auto limit = number_param<int>(params, "limit").value_or(options_.config.search_limit);
            if (limit <= 0 || limit > 100) throw ValidationError("limit must be between 1 and 100");
            json results = json::array();
            const auto lower = to_lower_ascii(query);
            for (auto i : search_nodes(query, kinds_param(params), static_cast<std::size_t>(limit))) {
                json r = view_json(i);
                r["match_position"] = names_lower_[i].find(lower.substr(lower.find_first_not_of(" \t")));
                results.push_back(std::move(r));
            }
            return {200, {{"query", query}, {"results", results}}};
        }
        if (seg.size() == 1 && seg[0] == "path") {
            require("GET");
            const auto from = param(params, "from"), to = param(params, "to");
            if (!from || !to) throw ValidationError("from and to are required");
            return {200, path(*from, *to)};
        }
        if (seg.size() >= 2 && seg.size() <= 3 && seg[0] == "node") {
            require("GET");
            const auto& id = seg[1];
            if (seg.size() == 2) return {200, node_payload(id)};
            if (seg[2] == "detail") return {200, node_detail(id)};
            if (seg[2] == "collaborators") return {200, collaborators(id)};
            if (seg[2] == "recommendations") {
                return {200, recommendations(id, param(params, "kind").value_or(""), param(params, "why").value_or(""))};
            }
        }
        if (seg.size() >= 2 && seg.size() <= 3 && seg[0] == "teaming") {
            const auto& session = seg[1];
            if (seg.size() == 2) return (require("GET"), ApiResponse{200, session_dump(session)});
            if (seg[2] == "message") return (require("POST"), ApiResponse{200, post_message(session, parse_body())});
            if (seg[2] == "feedback") return (require("POST"), ApiResponse{200, post_feedback(session, parse_body())});
        }
        throw RouteNotFound(path_str);
    } catch (const RouteNotFound& e) {
        return {404, error_body("not_found", std::string("no such endpoint: ") + e.what())};
    } catch (const MethodNotAllowed& e) {
        return {405, error_body("method_not_allowed", e.what())};
    } catch (const NotFoundError& e) {
        return {404, error_body("not_found", e.what())};
    } catch (const ValidationError& e) {
        return {400, error_body("invalid_request", e.what())};
    } catch (const ContractViolation& e) {
        return {400, error_body("invalid_request", e.what())};
    } catch (const ConflictError& e) {
        return {409, error_body("conflict", e.what())};
    } catch (const LlmTransportError& e) {
        return {503, error_body("llm_unavailable", e.what())};
    } catch (const AgentParseError& e) {
        return {502, error_body("agent_parse_failure", e.what())};
    } catch (const std::exception& e) {
        spdlog::error("{} {} failed: {}", method, path_str, e.what());
        return {500, error_body("internal", e.what())};
    }
}

void mount_routes(httplib::Server& server, ApiService& service) {
    auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
        QueryParams params(req.params.begin(), req.params.end());
        const auto r = service.handle(req.method, req.path, params, req.body);
        res.status = r.status;
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_content(r.dump(), "application/json");
    };
    server.set_tcp_nodelay(true);
    server.Get(R"(/api/v1/.*)", handler);
    server.Post(R"(/api/v1/.*)", handler);
}

}  // namespace tkg
