#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace tkg {

// Stable 64-bit FNV-1a. Used wherever a hash must not change between builds or platforms.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

// std::uniform_*_distribution output is implementation-defined, so seeded code goes through
// these helpers, which only depend on the (standardized) mt19937_64 bit stream.
using Rng = std::mt19937_64;
double uniform01(Rng& rng);
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);
double standard_normal(Rng& rng);
template <typename T>
void seeded_shuffle(std::vector<T>& items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::swap(items[i - 1], items[uniform_index(rng, i)]);
    }
}

std::string to_lower_ascii(std::string_view s);

// Lowercased alphanumeric runs.
std::vector<std::string> tokenize(std::string_view text);
bool is_stopword(std::string_view token);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

int current_year();

}  // namespace tkg
