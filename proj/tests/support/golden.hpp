#pragma once
// Golden-file comparison. Set TKG_UPDATE_GOLDEN=1 to (re)write the files instead.

#include <cstdlib>
#include <filesystem>
#include <string>

#include "tkg/util.hpp"

namespace fixture {

struct GoldenResult {
    bool ok = false;
    std::string message;
};

inline GoldenResult check_golden(const std::string& name, const std::string& actual) {
    const std::filesystem::path path = std::filesystem::path(TKG_GOLDEN_DIR) / name;
    const char* update = std::getenv("TKG_UPDATE_GOLDEN");
    if (update && std::string(update) == "1") {
        tkg::write_file(path, actual);
        return {true, "updated " + path.string()};
    }
    if (!std::filesystem::exists(path)) return {false, path.string() + " missing (run with TKG_UPDATE_GOLDEN=1)"};
    const auto expected = tkg::read_file(path);
    if (expected == actual) return {true, ""};
    std::size_t at = 0;
    while (at < expected.size() && at < actual.size() && expected[at] == actual[at]) ++at;
    return {false, name + " differs at byte " + std::to_string(at) + ": expected \"" + expected.substr(at, 60) +
                       "\" got \"" + actual.substr(at, 60) + "\""};
}

}  // namespace fixture
