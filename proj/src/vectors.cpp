#include "tkg/vectors.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"

#include "tkg/errors.hpp"

namespace tkg {

static_assert(std::endian::native == std::endian::little, "KGEMB1 I/O assumes a little-endian host");

namespace {
constexpr char kMagic[8] = {'K', 'G', 'E', 'M', 'B', '1', '\0', '\0'};
}

EmbeddingVector EmbeddingVector::basis(std::size_t dim, std::size_t axis) {
    if (axis >= dim) throw ContractViolation("basis axis out of range");
    auto v = zeros(dim);
    v.values_[axis] = 1.0f;
    return v;
}

double EmbeddingVector::norm() const { return std::sqrt(dot_exact(values_, values_)); }

bool EmbeddingVector::all_finite() const {
    for (float x : values_) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

bool EmbeddingVector::is_unit(double tol) const { return std::abs(norm() - 1.0) <= tol; }

EmbeddingVector EmbeddingVector::normalized() const {
    const double n = norm();
    if (!(n > 1e-12)) throw DegenerateError("degenerate aggregate: zero-norm vector");
    std::vector<float> out(values_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(values_[i] / n);
    return EmbeddingVector(std::move(out));
}

double dot_exact(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw ContractViolation("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return s;
}

std::optional<std::size_t> EmbeddingTable::find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void EmbeddingTable::add(const std::string& id, std::span<const float> values) {
    if (dim_ == 0 && ids_.empty()) dim_ = values.size();
    if (values.size() != dim_) {
        throw ContractViolation("embedding dimension mismatch for " + id + ": got " + std::to_string(values.size()) +
                                ", expected " + std::to_string(dim_));
    }
    if (!index_.emplace(id, ids_.size()).second) throw ContractViolation("duplicate embedding id " + id);
    ids_.push_back(id);
    data_.insert(data_.end(), values.begin(), values.end());
}

void write_embedding_table(const EmbeddingTable& table, const std::filesystem::path& matrix_path,
                           const std::filesystem::path& index_path) {
    std::ofstream out(matrix_path, std::ios::binary | std::ios::trunc);
    if (!out) throw LoadError("cannot write " + matrix_path.string());
    const auto rows = static_cast<std::uint32_t>(table.size());
    const auto dim = static_cast<std::uint32_t>(table.dim());
    out.write(kMagic, sizeof kMagic);
    out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
    out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
    out.write(reinterpret_cast<const char*>(table.data().data()),
              static_cast<std::streamsize>(table.data().size() * sizeof(float)));

    std::ofstream idx(index_path, std::ios::binary | std::ios::trunc);
    if (!idx) throw LoadError("cannot write " + index_path.string());
    for (std::size_t r = 0; r < table.size(); ++r) {
        idx << nlohmann::json{{"row", r}, {"id", table.id(r)}}.dump() << '\n';
    }
}

EmbeddingTable read_embedding_table(const std::filesystem::path& matrix_path,
                                    const std::filesystem::path& index_path) {
    const std::string fname = matrix_path.filename().string();
    std::ifstream in(matrix_path, std::ios::binary);
    if (!in) throw LoadError(fname + " not found");
    char magic[8];
    std::uint32_t rows = 0, dim = 0;
    in.read(magic, sizeof magic);
    in.read(reinterpret_cast<char*>(&rows), sizeof rows);
    in.read(reinterpret_cast<char*>(&dim), sizeof dim);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw LoadError(fname + ": bad KGEMB1 header");
    if (dim == 0 && rows > 0) throw LoadError(fname + ": zero dimension");

    std::vector<std::string> ids(rows);
    std::vector<bool> seen(rows, false);
    {
        std::ifstream idx(index_path);
        const std::string iname = index_path.filename().string();
        if (!idx) throw LoadError(iname + " not found");
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(idx, line)) {
            ++lineno;
            if (line.empty()) continue;
            try {
                auto j = nlohmann::json::parse(line);
                const auto r = j.at("row").get<std::size_t>();
                if (r >= rows || seen[r]) throw LoadError("row out of range or repeated");
                ids[r] = j.at("id").get<std::string>();
                seen[r] = true;
            } catch (const std::exception& e) {
                throw LoadError(iname + ":" + std::to_string(lineno) + ": " + e.what());
            }
        }
        for (std::size_t r = 0; r < rows; ++r) {
            if (!seen[r]) throw LoadError(iname + ": no id for row " + std::to_string(r));
        }
    }

    EmbeddingTable table(dim);
    std::vector<float> buf(dim);
    for (std::uint32_t r = 0; r < rows; ++r) {
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(dim * sizeof(float)));
        if (!in) throw LoadError(fname + ": truncated at row " + std::to_string(r));
        table.add(ids[r], buf);
    }
    return table;
}

}  // namespace tkg
