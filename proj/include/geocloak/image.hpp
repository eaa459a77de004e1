#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace geocloak {

using Rgb = std::array<float, 3>;

// Row-major RGB buffer with channels in [0, 1].
class RasterImage {
 public:
  RasterImage() = default;
  // Filled with `fill`. Throws DegenerateInputError for zero dimensions.
  RasterImage(int width, int height, Rgb fill = {0.f, 0.f, 0.f});

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }

  Rgb at(int x, int y) const {
    const float* p = &pixels_[index(x, y)];
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, const Rgb& c) {
    float* p = &pixels_[index(x, y)];
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }

  std::span<const float> data() const { return pixels_; }
  std::span<float> data() { return pixels_; }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<float> pixels_;
};

// Rec. 601 luma.
inline float luma(const Rgb& c) { return 0.299f * c[0] + 0.587f * c[1] + 0.114f * c[2]; }

// Binary PPM (P6, maxval 255). Raises FileNotFoundError, MalformedHeaderError
// or TruncatedDataError.
RasterImage read_image(const std::filesystem::path& path);
RasterImage decode_ppm(std::span<const unsigned char> bytes);

// Channels are encoded as floor(c * 255 + 0.5) after clamping to [0, 1].
void write_image(const RasterImage& img, const std::filesystem::path& path);
std::vector<unsigned char> encode_ppm(const RasterImage& img);

// PNG support is not compiled in.
inline constexpr bool kPngSupported = false;

}  // namespace geocloak
