#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kgalign/error.hpp"

namespace kgalign {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense row-major embedding matrix tagged with the method that produced it
/// and the id of the item behind every row.
///
/// Values are immutable after construction; all transforms return a new
/// matrix. The constructor enforces shape, finiteness, and index uniqueness.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;

  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<double> data, std::string method,
                  std::vector<std::string> index)
      : rows_(rows), dim_(dim), data_(std::move(data)), method_(std::move(method)), index_(std::move(index)) {
    if (method_.empty()) throw ValidationError("embedding matrix needs a method label");
    if (rows_ != 0 && dim_ > data_.max_size() / rows_)
      throw ValidationError("embedding matrix shape overflows");
    if (data_.size() != rows_ * dim_)
      throw DimensionMismatchError("embedding matrix data has " + std::to_string(data_.size()) +
                                   " entries, expected " + std::to_string(rows_ * dim_));
    if (index_.size() != rows_)
      throw DimensionMismatchError("embedding matrix index has " + std::to_string(index_.size()) +
                                   " entries, expected " + std::to_string(rows_));
    for (double v : data_)
      if (!std::isfinite(v)) throw ValidationError("embedding matrix '" + method_ + "' has a non-finite entry");
    lookup_.reserve(rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      if (!lookup_.emplace(index_[i], i).second)
        throw DuplicateError("embedding matrix index repeats item '" + index_[i] + "'");
  }

  static EmbeddingMatrix from_eigen(const RowMatrix& m, std::string method, std::vector<std::string> index) {
    std::vector<double> data(m.data(), m.data() + m.size());
    return EmbeddingMatrix(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()),
                           std::move(data), std::move(method), std::move(index));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  const std::string& method() const noexcept { return method_; }
  const std::vector<std::string>& index() const noexcept { return index_; }
  std::span<const double> data() const noexcept { return data_; }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }

  std::optional<std::size_t> find(std::string_view key) const {
    auto it = lookup_.find(std::string(key));
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
  }

  Eigen::Map<const RowMatrix> as_eigen() const {
    return {data_.data(), static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(dim_)};
  }

  RowMatrix to_eigen() const { return as_eigen(); }

  EmbeddingMatrix with_method(std::string method) const {
    return EmbeddingMatrix(rows_, dim_, data_, std::move(method), index_);
  }

  friend bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
    return a.rows_ == b.rows_ && a.dim_ == b.dim_ && a.method_ == b.method_ && a.index_ == b.index_ &&
           a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
  std::string method_ = "empty";
  std::vector<std::string> index_;
  std::unordered_map<std::string, std::size_t> lookup_;
};

// ---------------------------------------------------------------------------
// Binary matrix format (little-endian):
//   "EMBX1" | u32 label length | label bytes | u64 rows | u64 dim |
//   rows*dim float32 row-major | rows * (u32 length | utf-8 index entry)
// ---------------------------------------------------------------------------

inline constexpr std::string_view kMatrixMagic = "EMBX1";

namespace detail {

template <typename T>
T byteswap_if_big(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    std::reverse(bytes, bytes + sizeof(T));
    std::memcpy(&value, bytes, sizeof(T));
  }
  return value;
}

template <typename T>
void write_le(std::ostream& out, T value) {
  value = byteswap_if_big(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const char* what) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T)))
    throw FormatError(std::string("matrix file truncated while reading ") + what);
  return byteswap_if_big(value);
}

inline std::string read_bytes(std::istream& in, std::size_t n, const char* what, std::uint64_t remaining) {
  if (n > remaining) throw FormatError(std::string("matrix file truncated while reading ") + what);
  std::string s(n, '\0');
  if (n != 0 && !in.read(s.data(), static_cast<std::streamsize>(n)))
    throw FormatError(std::string("matrix file truncated while reading ") + what);
  return s;
}

inline std::uint64_t remaining_bytes(std::istream& in) {
  auto here = in.tellg();
  if (here < 0) return UINT64_MAX;
  in.seekg(0, std::ios::end);
  auto end = in.tellg();
  in.seekg(here);
  return end < here ? 0 : static_cast<std::uint64_t>(end - here);
}

}  // namespace detail

inline void write_matrix(std::ostream& out, const EmbeddingMatrix& m) {
  out.write(kMatrixMagic.data(), static_cast<std::streamsize>(kMatrixMagic.size()));
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.method().size()));
  out.write(m.method().data(), static_cast<std::streamsize>(m.method().size()));
  detail::write_le<std::uint64_t>(out, m.rows());
  detail::write_le<std::uint64_t>(out, m.dim());
  for (double v : m.data()) detail::write_le<float>(out, static_cast<float>(v));
  for (const auto& key : m.index()) {
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(key.size()));
    out.write(key.data(), static_cast<std::streamsize>(key.size()));
  }
  if (!out) throw IoError("failed writing matrix");
}

inline EmbeddingMatrix read_matrix(std::istream& in) {
  char magic[5];
  if (!in.read(magic, 5) || std::string_view(magic, 5) != kMatrixMagic)
    throw FormatError("bad magic: not an EMBX1 matrix file");
  auto label_len = detail::read_le<std::uint32_t>(in, "label length");
  std::string label = detail::read_bytes(in, label_len, "label", detail::remaining_bytes(in));
  auto rows = detail::read_le<std::uint64_t>(in, "rows");
  auto dim = detail::read_le<std::uint64_t>(in, "dim");
  if (dim != 0 && rows > UINT64_MAX / dim / sizeof(float)) throw FormatError("matrix header shape overflows");
  if (rows * dim * sizeof(float) > detail::remaining_bytes(in))
    throw FormatError("matrix file truncated: header promises " + std::to_string(rows) + "x" + std::to_string(dim));
  std::vector<double> data(rows * dim);
  for (auto& v : data) v = detail::read_le<float>(in, "values");
  std::vector<std::string> index;
  index.reserve(rows);
  for (std::uint64_t i = 0; i < rows; ++i) {
    auto len = detail::read_le<std::uint32_t>(in, "index length");
    index.push_back(detail::read_bytes(in, len, "index entry", detail::remaining_bytes(in)));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after matrix index");
  try {
    return EmbeddingMatrix(rows, dim, std::move(data), std::move(label), std::move(index));
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(std::string("invalid matrix contents: ") + e.what());
  }
}

inline void write_matrix(const std::filesystem::path& path, const EmbeddingMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_matrix(out, m);
}

inline EmbeddingMatrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_matrix(in);
}

}  // namespace kgalign
