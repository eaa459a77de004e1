#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geocloak/error.hpp"

namespace geocloak {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian and written from host memory");

// Append-only byte buffer for the versioned binary formats.
class BinaryWriter {
 public:
  void magic(std::string_view m) { raw(m.data(), m.size()); }

  template <typename T>
  void pod(const T& v) {
    raw(&v, sizeof(T));
  }

  template <typename T>
  void array(std::span<const T> values) {
    raw(values.data(), values.size_bytes());
  }

  void string(std::string_view s) {
    pod(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }

  const std::vector<unsigned char>& bytes() const { return bytes_; }

  void save(const std::filesystem::path& path) const;

 private:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    bytes_.insert(bytes_.end(), b, b + n);
  }

  std::vector<unsigned char> bytes_;
};

// Bounds-checked reader; every short read raises TruncatedDataError.
class BinaryReader {
 public:
  explicit BinaryReader(std::vector<unsigned char> bytes) : bytes_(std::move(bytes)) {}
  static BinaryReader load(const std::filesystem::path& path);

  void expect_magic(std::string_view m);

  template <typename T>
  T pod() {
    T v;
    std::memcpy(&v, take(sizeof(T)), sizeof(T));
    return v;
  }

  template <typename T>
  std::vector<T> array(std::size_t count) {
    if (count > remaining() / sizeof(T)) throw TruncatedDataError("binary array truncated");
    std::vector<T> out(count);
    if (count > 0) std::memcpy(out.data(), take(count * sizeof(T)), count * sizeof(T));
    return out;
  }

  std::string string();

  std::size_t remaining() const { return bytes_.size() - pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  const unsigned char* take(std::size_t n);

  std::vector<unsigned char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace geocloak
