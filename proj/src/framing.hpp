#pragma once

// Internal helpers for the shared binary container format: 8-byte magic,
// u64 header length, JSON header, then length-prefixed raw float64 blocks.
// Little-endian throughout.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pialab/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

namespace pialab::detail {

inline constexpr char kMagic[8] = {'P', 'I', 'A', 'L', 'A', 'B', '0', '1'};

inline void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline std::uint64_t read_u64(std::istream& is, const std::string& field) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw format_error("truncated file: " + field);
  return v;
}

inline void write_header(std::ostream& os, const nlohmann::json& header) {
  os.write(kMagic, sizeof(kMagic));
  std::string text = header.dump();
  write_u64(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
}

inline nlohmann::json read_header(std::istream& is, const std::string& expect_kind) {
  char magic[8] = {};
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw format_error("bad magic (not a pialab container)");
  std::uint64_t len = read_u64(is, "header length");
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  if (!is) throw format_error("truncated file: header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    throw format_error("header is not valid json");
  }
  if (!header.is_object() || !header.contains("kind") || !header["kind"].is_string())
    throw format_error("header missing field: kind");
  if (header["kind"].get<std::string>() != expect_kind)
    throw format_error("header kind mismatch (expected " + expect_kind + ")");
  return header;
}

inline void write_block(std::ostream& os, const std::vector<double>& values) {
  write_u64(os, values.size() * sizeof(double));
  os.write(reinterpret_cast<const char*>(values.data()),
           static_cast<std::streamsize>(values.size() * sizeof(double)));
}

inline std::vector<double> read_block(std::istream& is, std::size_t expect_count,
                                      const std::string& field) {
  std::uint64_t bytes = read_u64(is, field + " length");
  if (bytes != expect_count * sizeof(double))
    throw format_error("wrong block size: " + field);
  std::vector<double> values(expect_count);
  is.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(bytes));
  if (!is) throw format_error("truncated file: " + field);
  return values;
}

template <class T>
T get_field(const nlohmann::json& j, const std::string& key) {
  if (!j.contains(key)) throw format_error("header missing field: " + key);
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw format_error("header field has wrong type: " + key);
  }
}

inline std::ofstream open_out(const std::string& path, std::ios::openmode mode) {
  std::ofstream os(path, mode);
  if (!os) throw io_error("cannot open for writing: " + path);
  return os;
}

inline std::ifstream open_in(const std::string& path, std::ios::openmode mode) {
  std::ifstream is(path, mode);
  if (!is) throw io_error("cannot open for reading: " + path);
  return is;
}

}  // namespace pialab::detail
