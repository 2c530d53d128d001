#pragma once

// AWG1 grid files and atomic output.
//
// Layout (little-endian): 'A' 'W' 'G' '1', u32 n, u32 N, f64 L, then N^n
// binary64 samples in row-major order.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "amlab/grid.hpp"

namespace amlab {

namespace detail {

template <class U>
void put_le(std::string& out, U value) {
  static_assert(std::is_unsigned_v<U>);
  for (std::size_t b = 0; b < sizeof(U); ++b) out.push_back(static_cast<char>((value >> (8 * b)) & 0xFF));
}

template <class U>
U get_le(const unsigned char* in) {
  U value = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) value |= static_cast<U>(in[b]) << (8 * b);
  return value;
}

}  // namespace detail

inline std::string encode_awg(const GridFunction& f) {
  const Grid& g = f.grid();
  std::string out = "AWG1";
  out.reserve(4 + 8 + 8 + 8 * f.size());
  detail::put_le(out, static_cast<std::uint32_t>(g.dim()));
  detail::put_le(out, static_cast<std::uint32_t>(g.points()));
  detail::put_le(out, std::bit_cast<std::uint64_t>(g.half_width()));
  for (double v : f.values()) detail::put_le(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

inline GridFunction decode_awg(const std::string& bytes) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  require(bytes.size() >= 20 && std::memcmp(p, "AWG1", 4) == 0, ErrorKind::parse_error, "missing AWG1 header");
  const auto n = detail::get_le<std::uint32_t>(p + 4);
  const auto points = detail::get_le<std::uint32_t>(p + 8);
  const double half_width = std::bit_cast<double>(detail::get_le<std::uint64_t>(p + 12));
  Grid grid(static_cast<int>(n), half_width, points);
  require(bytes.size() == 20 + 8 * grid.size(), ErrorKind::parse_error,
          "AWG1 payload size does not match the header");
  std::vector<double> values(grid.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    values[i] = std::bit_cast<double>(detail::get_le<std::uint64_t>(p + 20 + 8 * i));
  return GridFunction(grid, std::move(values));
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io_error, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes to a sibling temporary file and renames it over the target.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::io_error, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    require(static_cast<bool>(out), ErrorKind::io_error, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  require(!ec, ErrorKind::io_error, "cannot rename " + tmp.string() + ": " + ec.message());
}

inline GridFunction read_awg(const std::filesystem::path& path) { return decode_awg(read_file(path)); }

inline void write_awg(const std::filesystem::path& path, const GridFunction& f) {
  write_file_atomic(path, encode_awg(f));
}

}  // namespace amlab
