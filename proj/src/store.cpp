#include <mutex>
#include <unordered_map>

#include <sqlite3.h>

#include "tkg/agents.hpp"
#include "tkg/errors.hpp"

namespace tkg {

namespace {

// Two-column key/value table in a single-file database.
class KvTable {
  public:
    KvTable(const std::filesystem::path& path, std::string table) : table_(std::move(table)) {
        const int flags = SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX;
        if (sqlite3_open_v2(path.string().c_str(), &db_, flags, nullptr) != SQLITE_OK) {
            std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
            sqlite3_close(db_);
            throw LoadError("cannot open " + path.string() + ": " + msg);
        }
        sqlite3_busy_timeout(db_, 5000);
        exec("CREATE TABLE IF NOT EXISTS " + table_ + " (k TEXT PRIMARY KEY, v TEXT NOT NULL)");
    }
    ~KvTable() { sqlite3_close(db_); }
    KvTable(const KvTable&) = delete;
    KvTable& operator=(const KvTable&) = delete;

    std::optional<std::string> get(const std::string& key) const {
        std::lock_guard lock(mu_);
        Stmt st(db_, "SELECT v FROM " + table_ + " WHERE k = ?1");
        sqlite3_bind_text(st.s, 1, key.data(), static_cast<int>(key.size()), SQLITE_TRANSIENT);
        if (sqlite3_step(st.s) != SQLITE_ROW) return std::nullopt;
        const auto* text = reinterpret_cast<const char*>(sqlite3_column_text(st.s, 0));
        return std::string(text, static_cast<std::size_t>(sqlite3_column_bytes(st.s, 0)));
    }

    void put(const std::string& key, const std::string& value) {
        std::lock_guard lock(mu_);
        Stmt st(db_, "INSERT OR REPLACE INTO " + table_ + " (k, v) VALUES (?1, ?2)");
        sqlite3_bind_text(st.s, 1, key.data(), static_cast<int>(key.size()), SQLITE_TRANSIENT);
        sqlite3_bind_text(st.s, 2, value.data(), static_cast<int>(value.size()), SQLITE_TRANSIENT);
        if (sqlite3_step(st.s) != SQLITE_DONE) throw std::runtime_error(std::string("sqlite: ") + sqlite3_errmsg(db_));
    }

    std::size_t count() const {
        std::lock_guard lock(mu_);
        Stmt st(db_, "SELECT COUNT(*) FROM " + table_);
        sqlite3_step(st.s);
        return static_cast<std::size_t>(sqlite3_column_int64(st.s, 0));
    }

  private:
    struct Stmt {
        sqlite3_stmt* s = nullptr;
        Stmt(sqlite3* db, const std::string& sql) {
            if (sqlite3_prepare_v2(db, sql.c_str(), -1, &s, nullptr) != SQLITE_OK) {
                throw std::runtime_error(std::string("sqlite: ") + sqlite3_errmsg(db));
            }
        }
        ~Stmt() { sqlite3_finalize(s); }
    };

    void exec(const std::string& sql) {
        char* err = nullptr;
        if (sqlite3_exec(db_, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
            std::string msg = err ? err : "unknown error";
            sqlite3_free(err);
            throw std::runtime_error("sqlite: " + msg);
        }
    }

    sqlite3* db_ = nullptr;
    std::string table_;
    mutable std::mutex mu_;
};

}  // namespace

struct JustificationCache::Impl {
    std::unique_ptr<KvTable> table;
    mutable std::mutex mu;
    std::unordered_map<std::string, std::string> memory;
};

JustificationCache::JustificationCache(const std::filesystem::path& path) : impl_(std::make_unique<Impl>()) {
    if (!path.empty()) impl_->table = std::make_unique<KvTable>(path, "justifications");
}
JustificationCache::~JustificationCache() = default;

std::optional<std::string> JustificationCache::get(const std::string& key) const {
    if (impl_->table) return impl_->table->get(key);
    std::lock_guard lock(impl_->mu);
    auto it = impl_->memory.find(key);
    if (it == impl_->memory.end()) return std::nullopt;
    return it->second;
}

void JustificationCache::put(const std::string& key, const std::string& text) {
    if (impl_->table) return impl_->table->put(key, text);
    std::lock_guard lock(impl_->mu);
    impl_->memory[key] = text;
}

std::size_t JustificationCache::size() const {
    if (impl_->table) return impl_->table->count();
    std::lock_guard lock(impl_->mu);
    return impl_->memory.size();
}

struct SessionStore::Impl {
    explicit Impl(const std::filesystem::path& path) : table(path, "sessions") {}
    KvTable table;
};

SessionStore::SessionStore(const std::filesystem::path& path) : impl_(std::make_unique<Impl>(path)) {}
SessionStore::~SessionStore() = default;

std::optional<ChatSession> SessionStore::load(const std::string& session_id) const {
    auto body = impl_->table.get(session_id);
    if (!body) return std::nullopt;
    return session_from_json(nlohmann::json::parse(*body));
}

void SessionStore::save(const ChatSession& session) {
    impl_->table.put(session.session_id, session_to_json(session).dump());
}

}  // namespace tkg
