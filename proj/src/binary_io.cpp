#include "geocloak/binary_io.hpp"

#include <fstream>
#include <iterator>

namespace geocloak {

void BinaryWriter::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes_.data()), static_cast<std::streamsize>(bytes_.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

BinaryReader BinaryReader::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFoundError("cannot open: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return BinaryReader(std::move(bytes));
}

void BinaryReader::expect_magic(std::string_view m) {
  if (remaining() < m.size() || std::memcmp(bytes_.data() + pos_, m.data(), m.size()) != 0) {
    throw MalformedHeaderError("bad magic, expected " + std::string(m));
  }
  pos_ += m.size();
}

std::string BinaryReader::string() {
  const auto n = pod<std::uint32_t>();
  const auto* p = take(n);
  return std::string(reinterpret_cast<const char*>(p), n);
}

const unsigned char* BinaryReader::take(std::size_t n) {
  if (n > remaining()) throw TruncatedDataError("binary record truncated");
  const unsigned char* p = bytes_.data() + pos_;
  pos_ += n;
  return p;
}

}  // namespace geocloak
