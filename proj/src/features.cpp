#include "geocloak/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "geocloak/binary_io.hpp"
#include "geocloak/error.hpp"
#include "geocloak/rng.hpp"

namespace geocloak {

void FeatureSet::push_back(const Keypoint& kp, std::span<const double> desc) {
  keypoints.push_back(kp);
  descriptors.insert(descriptors.end(), desc.begin(), desc.end());
}

void normalize_descriptor(std::span<double> v, double clip) {
  auto rescale = [&v] {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    if (sq <= 0.0) return false;
    const double inv = 1.0 / std::sqrt(sq);
    for (double& x : v) x *= inv;
    return true;
  };
  if (!rescale()) return;
  if (clip < 1.0) {
    for (double& x : v) x = std::min(x, clip);
    rescale();
  }
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kAssumedInputBlur = 0.5;
constexpr int kBorder = 5;
constexpr int kRefineIterations = 5;
constexpr int kOrientationBins = 36;
constexpr double kOrientationPeakRatio = 0.8;
constexpr int kDescWidth = 4;
constexpr int kDescBins = 8;
constexpr double kDescMagClip = 0.2;

struct Plane {
  int w = 0;
  int h = 0;
  std::vector<double> v;

  Plane() = default;
  Plane(int width, int height) : w(width), h(height), v(static_cast<std::size_t>(width) * height) {}

  double operator()(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
  double& operator()(int x, int y) { return v[static_cast<std::size_t>(y) * w + x]; }
};

// Separable blur with clamp-to-edge borders. Symmetric under 90 degree
// rotations and mirroring of the input.
Plane blur(const Plane& src, double sigma) {
  if (sigma <= 0.0) return src;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[static_cast<std::size_t>(i + radius)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[static_cast<std::size_t>(i + radius)];
  }
  for (double& x : k) x /= sum;

  Plane tmp(src.w, src.h);
  for (int y = 0; y < src.h; ++y) {
    for (int x = 0; x < src.w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += k[static_cast<std::size_t>(i + radius)] * src(std::clamp(x + i, 0, src.w - 1), y);
      }
      tmp(x, y) = acc;
    }
  }
  Plane out(src.w, src.h);
  for (int y = 0; y < src.h; ++y) {
    for (int x = 0; x < src.w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += k[static_cast<std::size_t>(i + radius)] * tmp(x, std::clamp(y + i, 0, src.h - 1));
      }
      out(x, y) = acc;
    }
  }
  return out;
}

Plane downsample(const Plane& src) {
  Plane out((src.w + 1) / 2, (src.h + 1) / 2);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x) out(x, y) = src(2 * x, 2 * y);
  return out;
}

// Gaussian elimination with partial pivoting on a 3x3 system.
bool solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3> b,
            std::array<double, 3>& x) {
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (std::abs(a[pivot][col]) < 1e-14) return false;
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (int r = col + 1; r < 3; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int c = col; c < 3; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  for (int r = 2; r >= 0; --r) {
    double acc = b[r];
    for (int c = r + 1; c < 3; ++c) acc -= a[r][c] * x[c];
    x[r] = acc / a[r][r];
  }
  return true;
}

struct Octave {
  std::vector<Plane> gauss;  // scales_per_octave + 3 levels
  std::vector<Plane> dog;    // scales_per_octave + 2 levels
};

struct Extremum {
  int octave;
  int level;
  double x;  // octave pixel coordinates after refinement
  double y;
  double level_offset;
};

class Detector {
 public:
  Detector(const ExtractionParams& p, const Plane& luma) : p_(p) { build(luma); }

  FeatureSet run(std::string id) {
    FeatureSet fs;
    fs.image_id = std::move(id);
    for (int o = 0; o < static_cast<int>(octaves_.size()); ++o) {
      for (int lvl = 1; lvl <= p_.scales_per_octave; ++lvl) scan_level(o, lvl, fs);
    }
    return fs;
  }

 private:
  void build(const Plane& luma) {
    const int s = p_.scales_per_octave;
    const double k = std::pow(2.0, 1.0 / s);
    Plane base = blur(luma, std::sqrt(p_.base_sigma * p_.base_sigma -
                                      kAssumedInputBlur * kAssumedInputBlur));
    for (int o = 0; o < p_.octaves; ++o) {
      if (base.w < 2 * kBorder + 3 || base.h < 2 * kBorder + 3) break;
      Octave oct;
      oct.gauss.push_back(base);
      for (int i = 1; i < s + 3; ++i) {
        const double prev = p_.base_sigma * std::pow(k, i - 1);
        const double cur = prev * k;
        oct.gauss.push_back(blur(oct.gauss.back(), std::sqrt(cur * cur - prev * prev)));
      }
      for (int i = 0; i + 1 < static_cast<int>(oct.gauss.size()); ++i) {
        Plane d(base.w, base.h);
        for (std::size_t j = 0; j < d.v.size(); ++j) {
          d.v[j] = oct.gauss[static_cast<std::size_t>(i) + 1].v[j] - oct.gauss[static_cast<std::size_t>(i)].v[j];
        }
        oct.dog.push_back(std::move(d));
      }
      base = downsample(oct.gauss[static_cast<std::size_t>(s)]);
      octaves_.push_back(std::move(oct));
    }
  }

  static bool is_extremum(const std::vector<Plane>& dog, int lvl, int x, int y) {
    const double v = dog[static_cast<std::size_t>(lvl)](x, y);
    const bool want_max = v > 0.0;
    for (int dl = -1; dl <= 1; ++dl) {
      const Plane& p = dog[static_cast<std::size_t>(lvl + dl)];
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dl == 0 && dx == 0 && dy == 0) continue;
          const double n = p(x + dx, y + dy);
          if (want_max ? !(v > n) : !(v < n)) return false;
        }
      }
    }
    return true;
  }

  void scan_level(int o, int lvl, FeatureSet& fs) {
    const auto& dog = octaves_[static_cast<std::size_t>(o)].dog;
    const Plane& cur = dog[static_cast<std::size_t>(lvl)];
    const double prefilter = 0.5 * p_.contrast_threshold;
    for (int y = kBorder; y < cur.h - kBorder; ++y) {
      for (int x = kBorder; x < cur.w - kBorder; ++x) {
        if (std::abs(cur(x, y)) <= prefilter) continue;
        if (!is_extremum(dog, lvl, x, y)) continue;
        Extremum e{o, lvl, 0, 0, 0};
        if (!refine(dog, x, y, lvl, e)) continue;
        emit(e, fs);
      }
    }
  }

  // Quadratic fit of the DoG around (x, y, lvl); applies contrast and edge tests.
  bool refine(const std::vector<Plane>& dog, int x, int y, int lvl, Extremum& e) const {
    const int s = p_.scales_per_octave;
    double ox = 0, oy = 0, ol = 0;
    int it = 0;
    for (; it < kRefineIterations; ++it) {
      const Plane& d0 = dog[static_cast<std::size_t>(lvl - 1)];
      const Plane& d1 = dog[static_cast<std::size_t>(lvl)];
      const Plane& d2 = dog[static_cast<std::size_t>(lvl + 1)];
      const double gx = 0.5 * (d1(x + 1, y) - d1(x - 1, y));
      const double gy = 0.5 * (d1(x, y + 1) - d1(x, y - 1));
      const double gl = 0.5 * (d2(x, y) - d0(x, y));
      const double c = d1(x, y);
      const double hxx = d1(x + 1, y) + d1(x - 1, y) - 2 * c;
      const double hyy = d1(x, y + 1) + d1(x, y - 1) - 2 * c;
      const double hll = d2(x, y) + d0(x, y) - 2 * c;
      const double hxy = 0.25 * (d1(x + 1, y + 1) - d1(x - 1, y + 1) - d1(x + 1, y - 1) + d1(x - 1, y - 1));
      const double hxl = 0.25 * (d2(x + 1, y) - d2(x - 1, y) - d0(x + 1, y) + d0(x - 1, y));
      const double hyl = 0.25 * (d2(x, y + 1) - d2(x, y - 1) - d0(x, y + 1) + d0(x, y - 1));
      const std::array<std::array<double, 3>, 3> hessian{{{hxx, hxy, hxl}, {hxy, hyy, hyl}, {hxl, hyl, hll}}};
      std::array<double, 3> offset{};
      if (!solve3(hessian, {-gx, -gy, -gl}, offset)) return false;
      ox = offset[0];
      oy = offset[1];
      ol = offset[2];
      if (std::abs(ox) < 0.5 && std::abs(oy) < 0.5 && std::abs(ol) < 0.5) {
        const double contrast = c + 0.5 * (gx * ox + gy * oy + gl * ol);
        if (std::abs(contrast) < p_.contrast_threshold) return false;
        const double tr = hxx + hyy;
        const double det2 = hxx * hyy - hxy * hxy;
        const double r = p_.edge_ratio;
        if (det2 <= 0.0 || tr * tr * r >= (r + 1) * (r + 1) * det2) return false;
        e.level = lvl;
        e.x = x + ox;
        e.y = y + oy;
        e.level_offset = ol;
        return true;
      }
      x += static_cast<int>(std::lround(ox));
      y += static_cast<int>(std::lround(oy));
      lvl += static_cast<int>(std::lround(ol));
      if (lvl < 1 || lvl > s || x < kBorder || x >= d1.w - kBorder || y < kBorder || y >= d1.h - kBorder) {
        return false;
      }
    }
    return false;
  }

  void emit(const Extremum& e, FeatureSet& fs) const {
    const int s = p_.scales_per_octave;
    const Plane& g = octaves_[static_cast<std::size_t>(e.octave)].gauss[static_cast<std::size_t>(e.level)];
    const double oct_sigma = p_.base_sigma * std::pow(2.0, (e.level + e.level_offset) / s);
    const double factor = std::ldexp(1.0, e.octave);
    for (double angle : orientations(g, e.x, e.y, oct_sigma)) {
      Keypoint kp{e.x * factor, e.y * factor, oct_sigma * factor, angle};
      std::array<double, kDescriptorDim> desc{};
      describe(g, e.x, e.y, oct_sigma, angle, desc);
      fs.push_back(kp, desc);
    }
  }

  static bool gradient(const Plane& g, int x, int y, double& mag, double& angle) {
    if (x < 1 || y < 1 || x >= g.w - 1 || y >= g.h - 1) return false;
    const double dx = g(x + 1, y) - g(x - 1, y);
    const double dy = g(x, y + 1) - g(x, y - 1);
    mag = std::sqrt(dx * dx + dy * dy);
    angle = std::atan2(dy, dx);
    return true;
  }

  static std::vector<double> orientations(const Plane& g, double fx, double fy, double sigma) {
    const double win_sigma = 1.5 * sigma;
    const int radius = static_cast<int>(std::lround(3.0 * win_sigma));
    const int cx = static_cast<int>(std::lround(fx));
    const int cy = static_cast<int>(std::lround(fy));
    std::array<double, kOrientationBins> hist{};
    for (int dy = -radius; dy <= radius; ++dy) {
      for (int dx = -radius; dx <= radius; ++dx) {
        double mag, angle;
        if (!gradient(g, cx + dx, cy + dy, mag, angle)) continue;
        const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * win_sigma * win_sigma));
        int bin = static_cast<int>(std::floor(kOrientationBins * (angle + std::numbers::pi) / kTwoPi));
        bin = ((bin % kOrientationBins) + kOrientationBins) % kOrientationBins;
        hist[static_cast<std::size_t>(bin)] += w * mag;
      }
    }
    std::array<double, kOrientationBins> smooth{};
    for (int i = 0; i < kOrientationBins; ++i) {
      auto h = [&](int j) { return hist[static_cast<std::size_t>((j + kOrientationBins) % kOrientationBins)]; };
      smooth[static_cast<std::size_t>(i)] =
          (h(i - 2) + h(i + 2)) / 16.0 + 4.0 * (h(i - 1) + h(i + 1)) / 16.0 + 6.0 * h(i) / 16.0;
    }
    const double peak = *std::max_element(smooth.begin(), smooth.end());
    std::vector<double> out;
    if (peak <= 0.0) return out;
    for (int i = 0; i < kOrientationBins; ++i) {
      const double l = smooth[static_cast<std::size_t>((i + kOrientationBins - 1) % kOrientationBins)];
      const double c = smooth[static_cast<std::size_t>(i)];
      const double r = smooth[static_cast<std::size_t>((i + 1) % kOrientationBins)];
      if (c > l && c > r && c >= kOrientationPeakRatio * peak) {
        const double offset = 0.5 * (l - r) / (l - 2.0 * c + r);
        // Bin centers sit at (i + 0.5); bin 0 starts at -pi.
        double angle = (i + 0.5 + offset) * kTwoPi / kOrientationBins - std::numbers::pi;
        angle = std::fmod(angle, kTwoPi);
        if (angle < 0.0) angle += kTwoPi;
        if (angle >= kTwoPi) angle = 0.0;
        out.push_back(angle);
      }
    }
    return out;
  }

  static void describe(const Plane& g, double fx, double fy, double sigma, double angle,
                       std::array<double, kDescriptorDim>& desc) {
    const double cell = 3.0 * sigma;
    const int radius = static_cast<int>(
        std::lround(cell * std::numbers::sqrt2 * (kDescWidth + 1) * 0.5));
    const double cos_t = std::cos(angle);
    const double sin_t = std::sin(angle);
    const int cx = static_cast<int>(std::lround(fx));
    const int cy = static_cast<int>(std::lround(fy));
    const double sub_x = fx - cx;
    const double sub_y = fy - cy;
    const double weight_scale = -1.0 / (0.5 * kDescWidth * kDescWidth);
    std::array<double, (kDescWidth + 2) * (kDescWidth + 2) * (kDescBins + 2)> hist{};
    auto hidx = [](int r, int c, int o) {
      return static_cast<std::size_t>((r * (kDescWidth + 2) + c) * (kDescBins + 2) + o);
    };

    for (int dy = -radius; dy <= radius; ++dy) {
      for (int dx = -radius; dx <= radius; ++dx) {
        const double px = dx - sub_x;
        const double py = dy - sub_y;
        // Rotate into the keypoint frame, in cell units.
        const double rx = (cos_t * px + sin_t * py) / cell;
        const double ry = (-sin_t * px + cos_t * py) / cell;
        const double rbin = ry + kDescWidth / 2.0 - 0.5;
        const double cbin = rx + kDescWidth / 2.0 - 0.5;
        if (rbin <= -1.0 || rbin >= kDescWidth || cbin <= -1.0 || cbin >= kDescWidth) continue;
        double mag, grad_angle;
        if (!gradient(g, cx + dx, cy + dy, mag, grad_angle)) continue;
        double rel = grad_angle - angle;
        rel = std::fmod(rel, kTwoPi);
        if (rel < 0.0) rel += kTwoPi;
        const double obin = rel * kDescBins / kTwoPi;
        const double w = std::exp((rx * rx + ry * ry) * weight_scale) * mag;

        const int r0 = static_cast<int>(std::floor(rbin));
        const int c0 = static_cast<int>(std::floor(cbin));
        int o0 = static_cast<int>(std::floor(obin));
        const double fr = rbin - r0;
        const double fc = cbin - c0;
        const double fo = obin - o0;
        o0 %= kDescBins;
        for (int ir = 0; ir <= 1; ++ir) {
          const double wr = w * (ir ? fr : 1.0 - fr);
          for (int ic = 0; ic <= 1; ++ic) {
            const double wc = wr * (ic ? fc : 1.0 - fc);
            for (int io = 0; io <= 1; ++io) {
              const double wo = wc * (io ? fo : 1.0 - fo);
              hist[hidx(r0 + 1 + ir, c0 + 1 + ic, (o0 + io) % kDescBins)] += wo;
            }
          }
        }
      }
    }
    for (int r = 0; r < kDescWidth; ++r)
      for (int c = 0; c < kDescWidth; ++c)
        for (int o = 0; o < kDescBins; ++o)
          desc[static_cast<std::size_t>((r * kDescWidth + c) * kDescBins + o)] = hist[hidx(r + 1, c + 1, o)];
    normalize_descriptor(desc, kDescMagClip);
  }

  ExtractionParams p_;
  std::vector<Octave> octaves_;
};

}  // namespace

FeatureSet DogExtractor::extract(const RasterImage& img, std::string image_id) const {
  return extract_features(img, params_, std::move(image_id));
}

FeatureSet extract_features(const RasterImage& img, const ExtractionParams& params,
                            std::string image_id) {
  if (img.width() < kMinExtractionSide || img.height() < kMinExtractionSide) {
    throw DegenerateInputError("image smaller than 32x32 cannot be described");
  }
  if (params.octaves < 1 || params.scales_per_octave < 1) {
    throw ConfigError("extraction needs at least one octave and one scale");
  }
  Plane luma_plane(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) luma_plane(x, y) = luma(img.at(x, y));
  Detector detector(params, luma_plane);
  return detector.run(std::move(image_id));
}

FeatureSet synthetic_features(std::uint64_t seed, std::size_t n, const SyntheticLayout& layout,
                              std::string image_id) {
  Rng rng(seed);
  FeatureSet fs;
  fs.image_id = std::move(image_id);
  fs.keypoints.reserve(n);
  fs.descriptors.reserve(n * kDescriptorDim);
  std::array<double, kDescriptorDim> desc{};
  const double log_min = std::log(layout.min_scale);
  const double log_max = std::log(layout.max_scale);
  for (std::size_t i = 0; i < n; ++i) {
    Keypoint kp;
    kp.x = rng.uniform(0.0, layout.width);
    kp.y = rng.uniform(0.0, layout.height);
    kp.scale = std::exp(rng.uniform(log_min, log_max));
    kp.orientation = rng.uniform(0.0, kTwoPi);
    for (double& d : desc) d = std::abs(rng.normal());
    normalize_descriptor(desc);
    fs.push_back(kp, desc);
  }
  return fs;
}

namespace {
constexpr std::string_view kFeatureMagic = "GCFT1";
}

void write_features(const FeatureSet& fs, const std::filesystem::path& path) {
  BinaryWriter w;
  w.magic(kFeatureMagic);
  w.string(fs.image_id);
  w.pod(static_cast<std::uint32_t>(fs.size()));
  for (const Keypoint& kp : fs.keypoints) {
    w.pod(kp.x);
    w.pod(kp.y);
    w.pod(kp.scale);
    w.pod(kp.orientation);
  }
  w.array(std::span<const double>(fs.descriptors));
  w.save(path);
}

FeatureSet read_features(const std::filesystem::path& path) {
  BinaryReader r = BinaryReader::load(path);
  r.expect_magic(kFeatureMagic);
  FeatureSet fs;
  fs.image_id = r.string();
  const auto count = r.pod<std::uint32_t>();
  fs.keypoints.resize(count);
  for (Keypoint& kp : fs.keypoints) {
    kp.x = r.pod<double>();
    kp.y = r.pod<double>();
    kp.scale = r.pod<double>();
    kp.orientation = r.pod<double>();
  }
  fs.descriptors = r.array<double>(static_cast<std::size_t>(count) * kDescriptorDim);
  if (!r.at_end()) throw MalformedHeaderError("trailing bytes in feature file " + path.string());
  return fs;
}

}  // namespace geocloak
