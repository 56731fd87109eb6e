#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace tkg {

inline constexpr std::size_t kDefaultEmbeddingDim = 768;

class EmbeddingVector {
  public:
    EmbeddingVector() = default;
    explicit EmbeddingVector(std::vector<float> values) : values_(std::move(values)) {}
    explicit EmbeddingVector(std::span<const float> values) : values_(values.begin(), values.end()) {}

    static EmbeddingVector zeros(std::size_t dim) { return EmbeddingVector(std::vector<float>(dim, 0.0f)); }
    static EmbeddingVector basis(std::size_t dim, std::size_t axis);

    std::size_t dim() const noexcept { return values_.size(); }
    std::span<const float> values() const noexcept { return values_; }
    std::span<float> values() noexcept { return values_; }
    float operator[](std::size_t i) const { return values_[i]; }

    double norm() const;
    bool all_finite() const;
    bool is_unit(double tol = 1e-6) const;
    // Throws DegenerateError when the norm is (numerically) zero.
    EmbeddingVector normalized() const;

    bool operator==(const EmbeddingVector&) const = default;

  private:
    std::vector<float> values_;
};

// Sequential double-precision dot product. Every score that leaves the library is computed with
// this so results do not depend on which vectorized path produced the candidate set.
double dot_exact(std::span<const float> a, std::span<const float> b);

// Row-major float matrix keyed by string ids; the in-memory form of the KGEMB1 files.
class EmbeddingTable {
  public:
    EmbeddingTable() = default;
    explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }

    const std::vector<std::string>& ids() const noexcept { return ids_; }
    const std::string& id(std::size_t row) const { return ids_.at(row); }
    std::optional<std::size_t> find(const std::string& id) const;
    bool contains(const std::string& id) const { return find(id).has_value(); }

    std::span<const float> row(std::size_t r) const { return {data_.data() + r * dim_, dim_}; }
    std::span<float> row(std::size_t r) { return {data_.data() + r * dim_, dim_}; }
    EmbeddingVector vector(std::size_t r) const { return EmbeddingVector(row(r)); }
    const std::vector<float>& data() const noexcept { return data_; }

    // Throws ContractViolation on a dimension mismatch or a duplicate id.
    void add(const std::string& id, std::span<const float> values);
    void add(const std::string& id, const EmbeddingVector& v) { add(id, v.values()); }

  private:
    std::size_t dim_ = 0;
    std::vector<std::string> ids_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<float> data_;
};

// KGEMB1 binary format: 8-byte magic "KGEMB1\0\0", u32 rows, u32 dim (little endian), then
// rows*dim little-endian f32 values. Row ids live in a JSONL sidecar ({"row":r,"id":...}).
void write_embedding_table(const EmbeddingTable& table, const std::filesystem::path& matrix_path,
                           const std::filesystem::path& index_path);
EmbeddingTable read_embedding_table(const std::filesystem::path& matrix_path,
                                    const std::filesystem::path& index_path);

}  // namespace tkg
