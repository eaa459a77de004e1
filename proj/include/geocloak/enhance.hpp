#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "geocloak/image.hpp"

namespace geocloak {

enum class FilterName { Gotham, Kelvin, Lomo, Nashville, Toaster };

std::string_view to_string(FilterName f);
// Case-insensitive; nullopt for unknown names.
std::optional<FilterName> parse_filter(std::string_view name);

// Fixed approximations of the Instagram looks. With L the Rec. 601 luma,
// d the distance to the image center and d_max the center-to-corner distance:
//
//   Gotham     tone = clamp(1.4 (L^0.8 - 0.5) + 0.5); (0.9 tone, 0.9 tone, 1.1 tone + 0.03)
//   Kelvin     c' = saturate(c, 1.2); 0.65 c'^0.9 + 0.35 (1.0, 0.6, 0.0)
//   Lomo       clamp(1.5 (c - 0.5) + 0.5) * max(0, 1 - 0.6 (d/d_max)^2)
//   Nashville  0.8 (clamp(1.2 c + 0.06) - 0.5) + 0.5, then r += 0.05, b -= 0.05
//   Toaster    c' = saturate(c, 1.3); r += 0.25 g, green += 0.10 g with
//              g = 1 - d/d_max; times max(0, 1 - 0.5 (d/d_max)^2)
//
// where saturate(c, s) = clamp(L + s (c - L)). Every output is clamped to [0, 1].
// Distances use pixel centers: pixel (x, y) sits at (x + 0.5, y + 0.5) and
// the image center at (W / 2, H / 2).
RasterImage apply_filter(const RasterImage& img, FilterName f);

struct SaliencyPoint {
  double x = 0.0;
  double y = 0.0;
};

// Sobel-magnitude-weighted centroid of the luma, in pixel-center coordinates.
// Uniform images fall back to (W / 2, H / 2). Needs at least 3x3 pixels.
SaliencyPoint saliency_center(const RasterImage& img);

struct CropWindow {
  int x0 = 0;
  int y0 = 0;
  int w = 0;
  int h = 0;

  friend bool operator==(const CropWindow&, const CropWindow&) = default;
};

// Removes `fraction` of the area while keeping the aspect ratio: the window is
// floor(W sqrt(1 - f)) x floor(H sqrt(1 - f)), centered on the saliency
// center and clamped to the image.
std::pair<RasterImage, CropWindow> smart_crop(const RasterImage& img, double fraction);

inline constexpr double kTiltShiftMaxSigma = 4.0;

// Linear tilt-shift around row coordinate focus_y (pixel-center units, so row
// y is at y + 0.5). Rows within H/6 of the focus are copied; outside the band
// a separable Gaussian blur is applied whose sigma grows linearly to 4 px at
// distance H/2 and is rounded to an integer. Kernels span 3 sigma and are
// renormalized at the borders.
RasterImage tilt_shift(const RasterImage& img, double focus_y);

// Blur sigma used for a row; exposed for tests.
int tilt_shift_sigma(int row, int height, double focus_y);

// Full-image separable Gaussian blur with the tilt-shift kernel conventions.
RasterImage gaussian_blur(const RasterImage& img, int sigma);

// Filter, then crop, then tilt-shift, each optional. The tilt-shift focus is
// the saliency center of the image it is applied to.
struct EnhancementRecipe {
  std::optional<FilterName> filter;
  std::optional<double> crop_fraction;
  bool tilt_shift = false;

  bool is_identity() const { return !filter && !crop_fraction && !tilt_shift; }
  RasterImage apply(const RasterImage& img) const;
  std::string describe() const;
};

}  // namespace geocloak
