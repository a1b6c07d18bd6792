#pragma once

// Little-endian encoding helpers shared by the HSC and HSM readers/writers.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hscs/errors.hpp"

namespace hscs::detail {

class ByteWriter {
 public:
  void magic(std::string_view m) { bytes_.insert(bytes_.end(), m.begin(), m.end()); }

  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void f32_values(std::span<const double> values) {
    bytes_.reserve(bytes_.size() + 4 * values.size());
    for (double v : values) f32(static_cast<float>(v));
  }

  void write_to(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(FormatError::Kind::Io, "cannot open " + path.string() + " for writing");
    out.write(bytes_.data(), static_cast<std::streamsize>(bytes_.size()));
    if (!out) throw FormatError(FormatError::Kind::Io, "write failed: " + path.string());
  }

 private:
  std::vector<char> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::filesystem::path& path) : path_(path.string()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(FormatError::Kind::Io, "cannot open " + path_);
    bytes_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  const std::string& path() const noexcept { return path_; }

  void expect_magic(std::string_view m) {
    if (remaining() < m.size() || std::string_view(bytes_.data() + pos_, m.size()) != m)
      throw FormatError(FormatError::Kind::BadMagic, path_ + ": bad magic, expected " + std::string(m));
    pos_ += m.size();
  }

  std::uint32_t u32() {
    need(4, "header");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8, "header");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }

  // Reads count f32 values, widening to double.
  std::vector<double> f32_values(std::size_t count) {
    need(4 * count, "payload");
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
      std::uint32_t v = 0;
      for (int b = 0; b < 4; ++b)
        v |= std::uint32_t(static_cast<unsigned char>(bytes_[pos_ + 4 * i + b])) << (8 * b);
      out[i] = static_cast<double>(std::bit_cast<float>(v));
    }
    pos_ += 4 * count;
    return out;
  }

  void expect_end() const {
    if (remaining() != 0)
      throw FormatError(FormatError::Kind::TrailingData,
                        path_ + ": " + std::to_string(remaining()) + " unexpected trailing bytes");
  }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n)
      throw FormatError(FormatError::Kind::Truncated, path_ + ": truncated " + what + " (need " +
                                                          std::to_string(n) + " bytes, have " +
                                                          std::to_string(remaining()) + ")");
  }

 private:
  std::string path_;
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

// Product of dimensions, throwing DimensionOverflow if it exceeds limit.
inline std::uint64_t checked_product(std::span<const std::uint64_t> dims, std::uint64_t limit,
                                     const std::string& path) {
  std::uint64_t total = 1;
  for (std::uint64_t d : dims) {
    if (d != 0 && total > limit / d)
      throw FormatError(FormatError::Kind::DimensionOverflow, path + ": header dimensions overflow");
    total *= d;
  }
  return total;
}

}  // namespace hscs::detail
