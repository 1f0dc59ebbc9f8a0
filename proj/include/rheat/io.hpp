#pragma once

// CSV / binary serialization and content hashing.
//
// CSV: RFC 4180, comma separated, '\n' records, header row, numbers printed
// with 17 significant digits (round-trips doubles).
// Binary: "RHEAT1", u32 n, u32 rows, u32 cols, rows*cols f64, all little-endian.
// Hash: git blob id, sha1("blob <size>\0" + content), hex.

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rheat/error.hpp"
#include "rheat/fractional_field.hpp"
#include "rheat/galerkin.hpp"

namespace rheat {

inline std::string format_double(double v) {
  std::array<char, 40> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

namespace detail {

inline void append_row(std::string& out, std::string_view lead, std::span<const double> values) {
  out += lead;
  for (double v : values) {
    out += ',';
    out += format_double(v);
  }
  out += '\n';
}

inline std::string quote_csv(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

/// Header "t,x_0,...", then one row per coarse time t_i.
inline std::string sheet_to_csv(const SheetSample& sheet) {
  std::string out;
  const auto xs = sheet.points();
  detail::append_row(out, "t", xs);
  const auto ts = sheet.times();
  const Matrix& v = sheet.values();
  std::vector<double> row(static_cast<std::size_t>(v.cols()));
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    for (Eigen::Index c = 0; c < v.cols(); ++c) row[c] = v(r, c);
    detail::append_row(out, format_double(ts[r]), row);
  }
  return out;
}

/// Header "step,t,x_j...", then one row per saved step.
inline std::string scheme_to_csv(const SchemeState& state) {
  std::string out;
  const HatBasis& basis = state.grid.basis;
  std::vector<double> nodes;
  nodes.reserve(basis.size());
  for (long j = basis.first(); j <= basis.last(); ++j) nodes.push_back(basis.node(j));
  detail::append_row(out, "step,t", nodes);
  for (std::size_t r = 0; r < state.saved_steps.size(); ++r) {
    const long i = state.saved_steps[r];
    detail::append_row(out, std::to_string(i) + "," + format_double(state.grid.time(i)), state.row(r));
  }
  return out;
}

/// Generic table with a header of column names.
inline std::string table_to_csv(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) out += ',';
      out += detail::quote_csv(cells[k]);
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

// ---------------------------------------------------------------------------
// Binary

inline constexpr std::string_view binary_magic = "RHEAT1";

namespace detail {

template <class T>
void put_le(std::string& out, T value) {
  static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.append(bytes.data(), bytes.size());
}

template <class T>
T get_le(std::string_view in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) fail(ErrorKind::io, "binary: truncated input");
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  pos += sizeof(T);
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace detail

struct BinaryMatrix {
  std::uint32_t n = 0;
  Matrix values;
};

inline std::string matrix_to_binary(std::uint32_t n, const Matrix& values) {
  std::string out(binary_magic);
  detail::put_le<std::uint32_t>(out, n);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(values.rows()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(values.cols()));
  for (Eigen::Index r = 0; r < values.rows(); ++r)
    for (Eigen::Index c = 0; c < values.cols(); ++c) detail::put_le<double>(out, values(r, c));
  return out;
}

inline std::string scheme_to_binary(const SchemeState& state) {
  return matrix_to_binary(static_cast<std::uint32_t>(state.grid.level), state.coeffs);
}

inline BinaryMatrix binary_to_matrix(std::string_view in) {
  if (in.substr(0, binary_magic.size()) != binary_magic) fail(ErrorKind::io, "binary: bad magic");
  std::size_t pos = binary_magic.size();
  BinaryMatrix out;
  out.n = detail::get_le<std::uint32_t>(in, pos);
  const auto rows = detail::get_le<std::uint32_t>(in, pos);
  const auto cols = detail::get_le<std::uint32_t>(in, pos);
  if (in.size() - pos != static_cast<std::size_t>(rows) * cols * sizeof(double)) {
    fail(ErrorKind::io, "binary: payload size does not match the header");
  }
  out.values.resize(rows, cols);
  for (std::uint32_t r = 0; r < rows; ++r)
    for (std::uint32_t c = 0; c < cols; ++c) out.values(r, c) = detail::get_le<double>(in, pos);
  return out;
}

// ---------------------------------------------------------------------------
// Files and hashes

inline std::string git_blob_hash(std::string_view content) {
  const std::string header = "blob " + std::to_string(content.size()) + std::string(1, '\0');
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) fail(ErrorKind::io, "sha1: cannot allocate digest context");
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest.data(), &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) fail(ErrorKind::io, "sha1: digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out += hex[digest[k] >> 4];
    out += hex[digest[k] & 0xF];
  }
  return out;
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) fail(ErrorKind::io, "cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace rheat
