#include "geocloak/enhance.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>
#include <vector>

#include "geocloak/error.hpp"

namespace geocloak {
namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double luma_d(const Rgb& c) { return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]; }

double saturate(double c, double lum, double s) { return clamp01(lum + s * (c - lum)); }

Rgb to_rgb(double r, double g, double b) {
  return {static_cast<float>(clamp01(r)), static_cast<float>(clamp01(g)),
          static_cast<float>(clamp01(b))};
}

// d / d_max for pixel (x, y).
class RadialGeometry {
 public:
  explicit RadialGeometry(const RasterImage& img)
      : cx_(img.width() / 2.0), cy_(img.height() / 2.0), dmax_(std::hypot(cx_, cy_)) {}

  double ratio(int x, int y) const {
    return std::hypot(x + 0.5 - cx_, y + 0.5 - cy_) / dmax_;
  }

 private:
  double cx_;
  double cy_;
  double dmax_;
};

Rgb gotham(const Rgb& c) {
  const double tone = clamp01(1.4 * (std::pow(luma_d(c), 0.8) - 0.5) + 0.5);
  return to_rgb(0.9 * tone, 0.9 * tone, 1.1 * tone + 0.03);
}

Rgb kelvin(const Rgb& c) {
  static constexpr double kOverlay[3] = {1.0, 0.6, 0.0};
  const double lum = luma_d(c);
  double out[3];
  for (int i = 0; i < 3; ++i) {
    const double sat = saturate(c[i], lum, 1.2);
    out[i] = 0.65 * std::pow(sat, 0.9) + 0.35 * kOverlay[i];
  }
  return to_rgb(out[0], out[1], out[2]);
}

Rgb lomo(const Rgb& c, double ratio) {
  const double v = std::max(0.0, 1.0 - 0.6 * ratio * ratio);
  double out[3];
  for (int i = 0; i < 3; ++i) out[i] = clamp01(1.5 * (c[i] - 0.5) + 0.5) * v;
  return to_rgb(out[0], out[1], out[2]);
}

Rgb nashville(const Rgb& c) {
  double out[3];
  for (int i = 0; i < 3; ++i) out[i] = 0.8 * (clamp01(1.2 * c[i] + 0.06) - 0.5) + 0.5;
  return to_rgb(out[0] + 0.05, out[1], out[2] - 0.05);
}

Rgb toaster(const Rgb& c, double ratio) {
  const double lum = luma_d(c);
  const double glow = 1.0 - ratio;
  const double vignette = std::max(0.0, 1.0 - 0.5 * ratio * ratio);
  const double r = (saturate(c[0], lum, 1.3) + 0.25 * glow) * vignette;
  const double g = (saturate(c[1], lum, 1.3) + 0.10 * glow) * vignette;
  const double b = saturate(c[2], lum, 1.3) * vignette;
  return to_rgb(r, g, b);
}

std::vector<double> gaussian_kernel(int sigma) {
  const int radius = 3 * sigma;
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  for (int i = -radius; i <= radius; ++i) {
    k[static_cast<std::size_t>(i + radius)] =
        std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
  }
  return k;
}

}  // namespace

std::string_view to_string(FilterName f) {
  switch (f) {
    case FilterName::Gotham: return "Gotham";
    case FilterName::Kelvin: return "Kelvin";
    case FilterName::Lomo: return "Lomo";
    case FilterName::Nashville: return "Nashville";
    case FilterName::Toaster: return "Toaster";
  }
  return "?";
}

std::optional<FilterName> parse_filter(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  for (FilterName f : {FilterName::Gotham, FilterName::Kelvin, FilterName::Lomo,
                       FilterName::Nashville, FilterName::Toaster}) {
    std::string candidate(to_string(f));
    std::transform(candidate.begin(), candidate.end(), candidate.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (candidate == lower) return f;
  }
  return std::nullopt;
}

RasterImage apply_filter(const RasterImage& img, FilterName f) {
  RasterImage out = img;
  const RadialGeometry radial(img);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const Rgb c = img.at(x, y);
      switch (f) {
        case FilterName::Gotham: out.set(x, y, gotham(c)); break;
        case FilterName::Kelvin: out.set(x, y, kelvin(c)); break;
        case FilterName::Lomo: out.set(x, y, lomo(c, radial.ratio(x, y))); break;
        case FilterName::Nashville: out.set(x, y, nashville(c)); break;
        case FilterName::Toaster: out.set(x, y, toaster(c, radial.ratio(x, y))); break;
      }
    }
  }
  return out;
}

SaliencyPoint saliency_center(const RasterImage& img) {
  const int w = img.width();
  const int h = img.height();
  if (w < 3 || h < 3) throw DegenerateInputError("saliency needs an image of at least 3x3");

  std::vector<double> lum(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) lum[static_cast<std::size_t>(y) * w + x] = luma_d(img.at(x, y));
  auto L = [&](int x, int y) { return lum[static_cast<std::size_t>(y) * w + x]; };

  double total = 0.0;
  double sx = 0.0;
  double sy = 0.0;
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const double gx = (L(x + 1, y - 1) + 2 * L(x + 1, y) + L(x + 1, y + 1)) -
                        (L(x - 1, y - 1) + 2 * L(x - 1, y) + L(x - 1, y + 1));
      const double gy = (L(x - 1, y + 1) + 2 * L(x, y + 1) + L(x + 1, y + 1)) -
                        (L(x - 1, y - 1) + 2 * L(x, y - 1) + L(x + 1, y - 1));
      const double m = std::hypot(gx, gy);
      total += m;
      sx += m * (x + 0.5);
      sy += m * (y + 0.5);
    }
  }
  if (total <= 0.0) return {w / 2.0, h / 2.0};
  return {sx / total, sy / total};
}

std::pair<RasterImage, CropWindow> smart_crop(const RasterImage& img, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw ConfigError("crop fraction must be in [0, 1)");
  }
  const int W = img.width();
  const int H = img.height();
  const double side = std::sqrt(1.0 - fraction);
  CropWindow win;
  win.w = static_cast<int>(std::floor(W * side));
  win.h = static_cast<int>(std::floor(H * side));
  if (win.w < 1 || win.h < 1) throw DegenerateInputError("crop window collapses to zero size");
  if (win.w == W && win.h == H) return {img, win};

  const SaliencyPoint center = saliency_center(img);
  win.x0 = std::clamp(static_cast<int>(std::floor(center.x - win.w / 2.0 + 0.5)), 0, W - win.w);
  win.y0 = std::clamp(static_cast<int>(std::floor(center.y - win.h / 2.0 + 0.5)), 0, H - win.h);

  RasterImage out(win.w, win.h);
  for (int y = 0; y < win.h; ++y)
    for (int x = 0; x < win.w; ++x) out.set(x, y, img.at(win.x0 + x, win.y0 + y));
  return {std::move(out), win};
}

int tilt_shift_sigma(int row, int height, double focus_y) {
  const double band = height / 6.0;
  const double dist = std::abs(row + 0.5 - focus_y);
  if (dist <= band) return 0;
  const double ramp = height / 2.0 - band;
  const double sigma = std::min(kTiltShiftMaxSigma, kTiltShiftMaxSigma * (dist - band) / ramp);
  return static_cast<int>(std::floor(sigma + 0.5));
}

RasterImage gaussian_blur(const RasterImage& img, int sigma) {
  if (sigma <= 0) return img;
  const int w = img.width();
  const int h = img.height();
  const auto kernel = gaussian_kernel(sigma);
  const int radius = 3 * sigma;

  RasterImage horizontal(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc[3] = {0, 0, 0};
      double norm = 0.0;
      for (int k = std::max(-radius, -x); k <= std::min(radius, w - 1 - x); ++k) {
        const double wk = kernel[static_cast<std::size_t>(k + radius)];
        const Rgb c = img.at(x + k, y);
        for (int i = 0; i < 3; ++i) acc[i] += wk * c[i];
        norm += wk;
      }
      horizontal.set(x, y, to_rgb(acc[0] / norm, acc[1] / norm, acc[2] / norm));
    }
  }
  RasterImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc[3] = {0, 0, 0};
      double norm = 0.0;
      for (int k = std::max(-radius, -y); k <= std::min(radius, h - 1 - y); ++k) {
        const double wk = kernel[static_cast<std::size_t>(k + radius)];
        const Rgb c = horizontal.at(x, y + k);
        for (int i = 0; i < 3; ++i) acc[i] += wk * c[i];
        norm += wk;
      }
      out.set(x, y, to_rgb(acc[0] / norm, acc[1] / norm, acc[2] / norm));
    }
  }
  return out;
}

RasterImage tilt_shift(const RasterImage& img, double focus_y) {
  if (!(focus_y >= 0.0 && focus_y < img.height())) {
    throw ConfigError("tilt-shift focus row outside the image");
  }
  const int h = img.height();
  std::vector<int> sigma_of_row(static_cast<std::size_t>(h));
  int max_sigma = 0;
  for (int y = 0; y < h; ++y) {
    sigma_of_row[static_cast<std::size_t>(y)] = tilt_shift_sigma(y, h, focus_y);
    max_sigma = std::max(max_sigma, sigma_of_row[static_cast<std::size_t>(y)]);
  }

  RasterImage out = img;
  for (int sigma = 1; sigma <= max_sigma; ++sigma) {
    if (std::find(sigma_of_row.begin(), sigma_of_row.end(), sigma) == sigma_of_row.end()) continue;
    const RasterImage blurred = gaussian_blur(img, sigma);
    for (int y = 0; y < h; ++y) {
      if (sigma_of_row[static_cast<std::size_t>(y)] != sigma) continue;
      for (int x = 0; x < img.width(); ++x) out.set(x, y, blurred.at(x, y));
    }
  }
  return out;
}

RasterImage EnhancementRecipe::apply(const RasterImage& img) const {
  RasterImage out = filter ? apply_filter(img, *filter) : img;
  if (crop_fraction) out = smart_crop(out, *crop_fraction).first;
  if (tilt_shift) out = geocloak::tilt_shift(out, saliency_center(out).y);
  return out;
}

std::string EnhancementRecipe::describe() const {
  std::string s;
  auto add = [&](const std::string& part) { s += (s.empty() ? "" : "+") + part; };
  if (filter) add(std::string(to_string(*filter)));
  if (crop_fraction) add("crop" + std::to_string(*crop_fraction));
  if (tilt_shift) add("tiltshift");
  return s.empty() ? "identity" : s;
}

}  // namespace geocloak
