#include "tkg/llm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "tkg/errors.hpp"
#include "tkg/util.hpp"

namespace tkg {

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size() + 256);
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const auto open = tmpl.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        const auto close = tmpl.find("}}", open + 2);
        if (close == std::string_view::npos) throw ContractViolation("unterminated placeholder in template");
        out.append(tmpl.substr(pos, open - pos));
        const std::string key(tmpl.substr(open + 2, close - open - 2));
        auto it = values.find(key);
        if (it == values.end()) throw ContractViolation("no value for template placeholder {{" + key + "}}");
        out.append(it->second);
        pos = close + 2;
    }
    return out;
}

namespace {

std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        auto line = text.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        pos = nl + 1;
    }
    return lines;
}

bool is_key_line(std::string_view line) {
    const auto colon = line.find(':');
    if (colon == std::string_view::npos || colon == 0) return false;
    for (char c : line.substr(0, colon)) {
        if (!((c >= 'A' && c <= 'Z') || c == ' ' || c == '-' || c == '_')) return false;
    }
    return true;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> quoted_titles(std::string_view block) {
    std::vector<std::string> titles;
    std::size_t pos = 0;
    while (true) {
        const auto a = block.find('"', pos);
        if (a == std::string_view::npos) break;
        const auto b = block.find('"', a + 1);
        if (b == std::string_view::npos) break;
        titles.emplace_back(block.substr(a + 1, b - a - 1));
        pos = b + 1;
    }
    return titles;
}

std::vector<std::string> salient_tokens(std::string_view text, std::size_t limit) {
    std::vector<std::string> out;
    for (auto& t : tokenize(text)) {
        if (is_stopword(t) || std::find(out.begin(), out.end(), t) != out.end()) continue;
        out.push_back(std::move(t));
        if (out.size() == limit) break;
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out.append(sep);
        out.append(parts[i]);
    }
    return out;
}

std::string capitalize(std::string s) {
    if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
    return s;
}

// Most frequent salient title words, ties alphabetical.
std::vector<std::string> top_terms(const std::vector<std::string>& titles, std::size_t n) {
    std::map<std::string, int> freq;
    for (const auto& t : titles) {
        for (auto& w : tokenize(t)) {
            if (!is_stopword(w) && w.size() > 2) ++freq[w];
        }
    }
    std::vector<std::pair<std::string, int>> items(freq.begin(), freq.end());
    std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < std::min(n, items.size()); ++i) out.push_back(items[i].first);
    return out;
}

std::string first_or(const std::vector<std::string>& v, std::string fallback) {
    return v.empty() ? std::move(fallback) : v.front();
}

std::string mock_gap(std::string_view prompt, std::uint64_t pick) {
    std::string name = extract_field(prompt, "RESEARCHER");
    if (name.empty()) name = "The user";
    std::string need = extract_field(prompt, "USER NEED");
    if (need.empty()) need = first_or(quoted_titles(extract_field(prompt, "SEED PAPER")), "");
    const auto tokens = salient_tokens(need, 8);
    const std::string query = tokens.empty() ? trim(need) : capitalize(join(tokens, " "));

    auto titles = quoted_titles(extract_block(prompt, "RECENT PAPERS"));
    const auto cited = quoted_titles(extract_block(prompt, "MOST-CITED PAPERS"));
    titles.insert(titles.end(), cited.begin(), cited.end());
    const auto terms = top_terms(titles, 3);
    const std::string background = terms.empty() ? "their current research" : join(terms, ", ");

    std::string thoughts;
    switch (pick % 3) {
        case 0:
            thoughts = name + " has a publication record centered on " + background +
                       ". The request points to " + to_lower_ascii(query) +
                       ", which lies outside that core expertise, so the search should target researchers who "
                       "specialize in it.";
            break;
        case 1:
            thoughts = "Judging from work on " + background + ", " + name +
                       " would benefit from a partner with depth in " + to_lower_ascii(query) +
                       ". That is the gap the retrieval query should cover.";
            break;
        default:
            thoughts = "The stated need (" + to_lower_ascii(query) + ") goes beyond " + name + "'s focus on " +
                       background + "; collaborators should bring complementary expertise there.";
            break;
    }
    return "THOUGHTS: [Start of Thoughts] " + thoughts + " [End of Thoughts]\nQUERY: " + query + "\n";
}

std::string mock_rerank(std::string_view prompt, std::uint64_t seed, int jitter) {
    const std::string cand = extract_field(prompt, "CANDIDATE");
    const std::string query = extract_field(prompt, "SEARCH QUERY");
    double sim = 0.0;
    try {
        sim = std::stod(extract_field(prompt, "RETRIEVAL SIMILARITY"));
    } catch (const std::exception&) {
        sim = 0.0;
    }
    long score = std::lround(100.0 * std::max(0.0, sim));
    if (jitter > 0) {
        const auto span = static_cast<std::uint64_t>(2 * jitter + 1);
        score += static_cast<long>(fnv1a64(cand, seed) % span) - jitter;
    }
    score = std::clamp(score, 0L, 100L);
    const auto titles = quoted_titles(extract_block(prompt, "CANDIDATE PAPERS"));
    std::string just = titles.empty()
                           ? cand + "'s research profile relates to " + to_lower_ascii(query) + "."
                           : cand + "'s work on \"" + titles.front() + "\" can help address " + to_lower_ascii(query) + ".";
    return "SCORE: " + std::to_string(score) + "\nJUSTIFICATION: " + just + "\n";
}

std::string mock_justify_collab(std::string_view prompt, std::uint64_t pick) {
    const std::string author = extract_field(prompt, "RESEARCHER");
    const std::string cand = extract_field(prompt, "CANDIDATE");
    const auto ta = first_or(quoted_titles(extract_block(prompt, "RESEARCHER PAPERS")), "their recent work");
    const auto tc = first_or(quoted_titles(extract_block(prompt, "CANDIDATE PAPERS")), "their recent work");
    std::string text;
    if (pick % 2 == 0) {
        text = cand + "'s work on \"" + tc + "\" complements " + author + "'s research on \"" + ta +
               "\"; combining the two lines of work could open a joint project.";
    } else {
        text = author + " (\"" + ta + "\") and " + cand + " (\"" + tc +
               "\") study closely related problems from different angles, which makes them natural collaborators.";
    }
    return "JUSTIFICATION: " + text + "\n";
}

std::string mock_justify_dataset(std::string_view prompt, std::uint64_t pick) {
    const std::string dataset = extract_field(prompt, "DATASET");
    const std::string cand = extract_field(prompt, "CANDIDATE");
    const auto tc = first_or(quoted_titles(extract_block(prompt, "CANDIDATE PAPERS")), "their recent work");
    std::string text;
    if (pick % 2 == 0) {
        text = cand + " should consider " + dataset + ": their work on \"" + tc +
               "\" addresses questions this dataset can support.";
    } else {
        text = "The papers that used " + dataset + " are close to " + cand + "'s work on \"" + tc +
               "\", so the dataset could extend that line of research.";
    }
    return "JUSTIFICATION: " + text + "\n";
}

}  // namespace

std::string extract_field(std::string_view text, std::string_view key) {
    const std::string prefix = std::string(key) + ":";
    for (auto line : lines_of(text)) {
        if (line.substr(0, prefix.size()) == prefix) return trim(line.substr(prefix.size()));
    }
    return {};
}

std::string extract_block(std::string_view text, std::string_view key) {
    const std::string header = std::string(key) + ":";
    const auto lines = lines_of(text);
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]) != header) continue;
        for (std::size_t j = i + 1; j < lines.size(); ++j) {
            if (trim(lines[j]).empty() || is_key_line(lines[j])) break;
            out.append(lines[j]);
            out.push_back('\n');
        }
        break;
    }
    return out;
}

std::string MockLlmClient::complete(std::string_view prompt, const CompletionParams& params) {
    const std::string task = extract_field(prompt, "### TASK");
    const std::uint64_t pick = fnv1a64(prompt, params.seed);
    if (task == "gap_detect v1") return mock_gap(prompt, pick);
    if (task == "rerank v1") return mock_rerank(prompt, params.seed, score_jitter_);
    if (task == "justify_collab v1") return mock_justify_collab(prompt, pick);
    if (task == "justify_dataset v1") return mock_justify_dataset(prompt, pick);
    return "I cannot help with that request.\n";
}

HttpLlmClient::HttpLlmClient(HttpLlmConfig config) : config_(std::move(config)) {
    const auto& url = config_.endpoint;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("LLM endpoint must be an http(s) URL: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    scheme_host_port_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

std::string HttpLlmClient::complete(std::string_view prompt, const CompletionParams& params) {
    httplib::Client cli(scheme_host_port_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout).count();
    cli.set_connection_timeout(static_cast<time_t>(std::max<long long>(1, secs)), 0);
    cli.set_read_timeout(static_cast<time_t>(std::max<long long>(1, secs)), 0);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
    nlohmann::json body = {{"model", config_.model},
                           {"messages", {{{"role", "user"}, {"content", std::string(prompt)}}}},
                           {"temperature", params.temperature},
                           {"seed", params.seed},
                           {"max_tokens", params.max_tokens}};
    auto res = cli.Post(path_, headers, body.dump(), "application/json");
    if (!res) throw LlmTransportError("LLM request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) {
        throw LlmTransportError("LLM endpoint returned HTTP " + std::to_string(res->status));
    }
    try {
        auto j = nlohmann::json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const std::exception& e) {
        throw LlmTransportError(std::string("unexpected LLM response body: ") + e.what());
    }
}

}  // namespace tkg
