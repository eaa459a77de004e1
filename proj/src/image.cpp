#include "geocloak/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "geocloak/error.hpp"

namespace geocloak {

RasterImage::RasterImage(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 1 || height < 1) throw DegenerateInputError("image dimensions must be >= 1");
  pixels_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  for (std::size_t i = 0; i < pixels_.size(); i += 3) {
    pixels_[i] = fill[0];
    pixels_[i + 1] = fill[1];
    pixels_[i + 2] = fill[2];
  }
}

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long read_uint(const char* what) {
    skip_space_and_comments();
    long value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000) throw MalformedHeaderError(std::string("PPM ") + what + " too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw MalformedHeaderError(std::string("PPM header: missing ") + what);
    return value;
  }

  std::size_t& pos() { return pos_; }

 private:
  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

RasterImage decode_ppm(std::span<const unsigned char> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw MalformedHeaderError("not a binary PPM (missing P6 magic)");
  }
  HeaderReader header(bytes.subspan(2));
  const long width = header.read_uint("width");
  const long height = header.read_uint("height");
  const long maxval = header.read_uint("maxval");
  if (width < 1 || height < 1) throw MalformedHeaderError("PPM dimensions must be positive");
  if (maxval != 255) throw MalformedHeaderError("PPM maxval must be 255");
  std::size_t pos = 2 + header.pos();
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw MalformedHeaderError("PPM header not terminated by whitespace");
  }
  ++pos;

  const std::size_t needed = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3;
  if (bytes.size() - pos < needed) {
    throw TruncatedDataError("PPM pixel data truncated: expected " + std::to_string(needed) +
                             " bytes, found " + std::to_string(bytes.size() - pos));
  }
  RasterImage img(static_cast<int>(width), static_cast<int>(height));
  auto out = img.data();
  for (std::size_t i = 0; i < needed; ++i) out[i] = static_cast<float>(bytes[pos + i]) / 255.0f;
  return img;
}

RasterImage read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFoundError("cannot open image: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return decode_ppm(bytes);
}

std::vector<unsigned char> encode_ppm(const RasterImage& img) {
  const std::string header =
      "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<unsigned char> bytes(header.begin(), header.end());
  bytes.reserve(header.size() + img.data().size());
  for (float c : img.data()) {
    const float clamped = std::clamp(c, 0.0f, 1.0f);
    bytes.push_back(static_cast<unsigned char>(std::floor(clamped * 255.0f + 0.5f)));
  }
  return bytes;
}

void write_image(const RasterImage& img, const std::filesystem::path& path) {
  const auto bytes = encode_ppm(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace geocloak
