#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "geocloak/enhance.hpp"
#include "geocloak/error.hpp"
#include "geocloak/rng.hpp"
#include "support/fixtures.hpp"

using namespace geocloak;

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }
double L(const std::array<double, 3>& c) { return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]; }

// Straight transcription of the five recipes in double precision.
std::array<double, 3> oracle_filter(FilterName f, std::array<double, 3> c, double d_rel) {
  auto saturate = [](std::array<double, 3> c, double s) {
    const double l = L(c);
    for (double& v : c) v = clamp01(l + s * (v - l));
    return c;
  };
  switch (f) {
    case FilterName::Gotham: {
      const double tone = clamp01(1.4 * (std::pow(L(c), 0.8) - 0.5) + 0.5);
      return {0.9 * tone, 0.9 * tone, clamp01(1.1 * tone + 0.03)};
    }
    case FilterName::Kelvin: {
      const auto s = saturate(c, 1.2);
      const double ov[3] = {1.0, 0.6, 0.0};
      return {clamp01(0.65 * std::pow(s[0], 0.9) + 0.35 * ov[0]), clamp01(0.65 * std::pow(s[1], 0.9) + 0.35 * ov[1]),
              clamp01(0.65 * std::pow(s[2], 0.9) + 0.35 * ov[2])};
    }
    case FilterName::Lomo: {
      const double v = std::max(0.0, 1 - 0.6 * d_rel * d_rel);
      for (double& x : c) x = clamp01(1.5 * (x - 0.5) + 0.5) * v;
      return c;
    }
    case FilterName::Nashville: {
      for (double& x : c) x = 0.8 * (clamp01(1.2 * x + 0.06) - 0.5) + 0.5;
      return {clamp01(c[0] + 0.05), clamp01(c[1]), clamp01(c[2] - 0.05)};
    }
    case FilterName::Toaster: {
      auto s = saturate(c, 1.3);
      const double g = 1 - d_rel;
      s[0] += 0.25 * g;
      s[1] += 0.10 * g;
      const double v = std::max(0.0, 1 - 0.5 * d_rel * d_rel);
      for (double& x : s) x = clamp01(x * v);
      return s;
    }
  }
  return c;
}

constexpr FilterName kAll[] = {FilterName::Gotham, FilterName::Kelvin, FilterName::Lomo, FilterName::Nashville,
                               FilterName::Toaster};

RasterImage noise_image(std::uint64_t seed, int w, int h) {
  Rng rng(seed);
  RasterImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.set(x, y, {float(rng.uniform()), float(rng.uniform()), float(rng.uniform())});
  return img;
}

}  // namespace

TEST(Filters, GothamHandValue) {
  const RasterImage out = apply_filter(RasterImage(3, 3, {0.5f, 0.5f, 0.5f}), FilterName::Gotham);
  EXPECT_NEAR(out.at(1, 1)[0], 0.5436, 1e-3);
  EXPECT_NEAR(out.at(1, 1)[1], 0.5436, 1e-3);
  EXPECT_NEAR(out.at(1, 1)[2], 0.6944, 1e-3);
}

TEST(Filters, LomoCenterGrayIsFixed) {
  const RasterImage out = apply_filter(RasterImage(5, 7, {0.5f, 0.5f, 0.5f}), FilterName::Lomo);
  EXPECT_NEAR(out.at(2, 3)[0], 0.5, 1e-6);
  EXPECT_NEAR(out.at(2, 3)[2], 0.5, 1e-6);
}

TEST(Filters, MatchRecipeOracle) {
  const RasterImage img = noise_image(1, 23, 17);
  const double cx = 23 / 2.0, cy = 17 / 2.0, dmax = std::hypot(cx, cy);
  for (FilterName f : kAll) {
    const RasterImage out = apply_filter(img, f);
    ASSERT_EQ(out.width(), img.width());
    ASSERT_EQ(out.height(), img.height());
    for (int y = 0; y < 17; ++y)
      for (int x = 0; x < 23; ++x) {
        const Rgb c = img.at(x, y);
        const auto e = oracle_filter(f, {c[0], c[1], c[2]}, std::hypot(x + 0.5 - cx, y + 0.5 - cy) / dmax);
        for (int i = 0; i < 3; ++i) ASSERT_NEAR(out.at(x, y)[i], e[i], 1e-5) << to_string(f) << " " << x << "," << y;
      }
  }
}

TEST(Filters, OutputsInUnitRangeAndDeterministic) {
  const RasterImage img = noise_image(2, 40, 30);
  for (FilterName f : kAll) {
    const RasterImage a = apply_filter(img, f), b = apply_filter(img, f);
    EXPECT_EQ(a, b);
    for (float v : a.data()) {
      EXPECT_GE(v, 0.f);
      EXPECT_LE(v, 1.f);
    }
  }
}

TEST(Filters, GothamBluishGray) {
  const RasterImage out = apply_filter(noise_image(3, 100, 100), FilterName::Gotham);
  for (int y = 0; y < 100; ++y)
    for (int x = 0; x < 100; ++x) {
      const Rgb c = out.at(x, y);
      EXPECT_EQ(c[0], c[1]);
      EXPECT_GE(c[2], c[0]);
    }
}

TEST(Filters, VignetteDarkensCorners) {
  const RasterImage gray(21, 15, {0.7f, 0.7f, 0.7f});
  for (FilterName f : {FilterName::Lomo, FilterName::Toaster}) {
    const RasterImage out = apply_filter(gray, f);
    for (int i = 0; i < 3; ++i) EXPECT_LT(out.at(0, 0)[i] + 0.f, out.at(10, 7)[i]) << to_string(f);
  }
}

TEST(Filters, NamesRoundTrip) {
  for (FilterName f : kAll) EXPECT_EQ(parse_filter(to_string(f)), f);
  EXPECT_EQ(parse_filter("gOtHaM"), FilterName::Gotham);
  EXPECT_FALSE(parse_filter("valencia"));
}

TEST(Saliency, UniformFallsBackToCenter) {
  const SaliencyPoint s = saliency_center(RasterImage(100, 100, {0.4f, 0.4f, 0.4f}));
  EXPECT_EQ(s.x, 50.0);
  EXPECT_EQ(s.y, 50.0);
}

TEST(Saliency, CornerSquareInsideItsBox) {
  RasterImage img(100, 100);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) img.set(x, y, {1, 1, 1});
  const SaliencyPoint s = saliency_center(img);
  // Edge energy sits on both sides of the square's border, so the centroid
  // lies within the border's one-pixel neighbourhood.
  EXPECT_GE(s.x, 0.0);
  EXPECT_LE(s.x, 11.0);
  EXPECT_GE(s.y, 0.0);
  EXPECT_LE(s.y, 11.0);
}

TEST(Saliency, MatchesSobelOracle) {
  const RasterImage img = noise_image(4, 13, 9);
  double t = 0, sx = 0, sy = 0;
  auto lum = [&](int x, int y) {
    const Rgb c = img.at(x, y);
    return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2];
  };
  const int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  for (int y = 1; y < 8; ++y)
    for (int x = 1; x < 12; ++x) {
      double gx = 0, gy = 0;
      for (int j = -1; j <= 1; ++j)
        for (int i = -1; i <= 1; ++i) {
          gx += kx[j + 1][i + 1] * lum(x + i, y + j);
          gy += kx[i + 1][j + 1] * lum(x + i, y + j);
        }
      const double m = std::sqrt(gx * gx + gy * gy);
      t += m;
      sx += m * (x + 0.5);
      sy += m * (y + 0.5);
    }
  const SaliencyPoint s = saliency_center(img);
  EXPECT_NEAR(s.x, sx / t, 1e-9);
  EXPECT_NEAR(s.y, sy / t, 1e-9);
}

TEST(Saliency, MirrorSymmetricPattern) {
  const RasterImage half = noise_image(5, 20, 30);
  RasterImage img(40, 30);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 20; ++x) {
      img.set(x, y, half.at(x, y));
      img.set(39 - x, y, half.at(x, y));
    }
  EXPECT_NEAR(saliency_center(img).x, 20.0, 0.5);
}

TEST(Saliency, TooSmall) { EXPECT_THROW(saliency_center(RasterImage(2, 5)), DegenerateInputError); }

TEST(SmartCrop, WindowSize) {
  const auto [img, win] = smart_crop(RasterImage(1000, 800, {0.2f, 0.3f, 0.4f}), 0.2);
  EXPECT_EQ(win.w, 894);
  EXPECT_EQ(win.h, 715);
  EXPECT_EQ(img.width(), 894);
  EXPECT_EQ(img.height(), 715);
}

TEST(SmartCrop, ZeroFractionIsIdentity) {
  const RasterImage src = noise_image(6, 31, 19);
  const auto [img, win] = smart_crop(src, 0.0);
  EXPECT_EQ(img, src);
  EXPECT_EQ(win, (CropWindow{0, 0, 31, 19}));
}

TEST(SmartCrop, UniformIsCentered) {
  const auto [img, win] = smart_crop(RasterImage(200, 100, {0.5f, 0.5f, 0.5f}), 0.4);
  const int w = static_cast<int>(std::floor(200 * std::sqrt(0.6))), h = static_cast<int>(std::floor(100 * std::sqrt(0.6)));
  EXPECT_EQ(win.w, w);
  EXPECT_EQ(win.h, h);
  EXPECT_NEAR(win.x0 + win.w / 2.0, 100.0, 0.5);
  EXPECT_NEAR(win.y0 + win.h / 2.0, 50.0, 0.5);
}

TEST(SmartCrop, WindowInsideAndContentCopied) {
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    const int w = 10 + static_cast<int>(rng.below(60)), h = 10 + static_cast<int>(rng.below(60));
    const RasterImage src = noise_image(rng.next_u64(), w, h);
    const double f = rng.uniform(0, 0.9);
    const auto [img, win] = smart_crop(src, f);
    ASSERT_GE(win.x0, 0);
    ASSERT_GE(win.y0, 0);
    ASSERT_LE(win.x0 + win.w, w);
    ASSERT_LE(win.y0 + win.h, h);
    EXPECT_EQ(win.w, static_cast<int>(std::floor(w * std::sqrt(1 - f))));
    EXPECT_EQ(win.h, static_cast<int>(std::floor(h * std::sqrt(1 - f))));
    for (int y = 0; y < win.h; ++y)
      for (int x = 0; x < win.w; ++x) ASSERT_EQ(img.at(x, y), src.at(x + win.x0, y + win.y0));
  }
}

TEST(SmartCrop, BadFraction) {
  EXPECT_THROW(smart_crop(RasterImage(10, 10), 1.0), ConfigError);
  EXPECT_THROW(smart_crop(RasterImage(10, 10), -0.1), ConfigError);
  EXPECT_THROW(smart_crop(RasterImage(3, 3), 0.95), DegenerateInputError);
}

TEST(TiltShift, UniformUnchanged) {
  const RasterImage img(30, 60, {0.3f, 0.6f, 0.9f});
  EXPECT_EQ(tilt_shift(img, 10.0), img);
}

TEST(TiltShift, FocusBandBitIdentical) {
  const RasterImage img = noise_image(9, 40, 90);
  for (double focus : {0.0, 20.5, 45.0, 89.9}) {
    const RasterImage out = tilt_shift(img, focus);
    for (int y = 0; y < 90; ++y) {
      if (std::abs(y + 0.5 - focus) > 90 / 6.0) continue;
      for (int x = 0; x < 40; ++x) ASSERT_EQ(out.at(x, y), img.at(x, y));
    }
  }
}

TEST(TiltShift, SigmaSchedule) {
  // H = 120: band 20, ramp 40, sigma 4 at distance 60.
  EXPECT_EQ(tilt_shift_sigma(59, 120, 60.0), 0);
  EXPECT_EQ(tilt_shift_sigma(79, 120, 60.0), 0);   // distance 19.5
  EXPECT_EQ(tilt_shift_sigma(84, 120, 60.0), 0);   // 24.5 -> 0.45
  EXPECT_EQ(tilt_shift_sigma(85, 120, 60.0), 1);   // 25.5 -> 0.55
  EXPECT_EQ(tilt_shift_sigma(119, 120, 0.5), 4);
  for (int y = 0; y < 120; ++y) {
    const int s = tilt_shift_sigma(y, 120, 30.0);
    EXPECT_GE(s, 0);
    EXPECT_LE(s, 4);
  }
}

TEST(TiltShift, MatchesDirectKernelSum) {
  // Alternating columns; rows far from the focus get blurred towards 0.5.
  const int w = 24, h = 60;
  RasterImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const float v = x % 2 ? 1.f : 0.f;
      img.set(x, y, {v, v, v});
    }
  const double focus = 5.0;
  const RasterImage out = tilt_shift(img, focus);
  bool saw_sigma2 = false;
  for (int y = 0; y < h; ++y) {
    const int s = tilt_shift_sigma(y, h, focus);
    if (s == 0) continue;
    saw_sigma2 |= s == 2;
    const int r = 3 * s;
    for (int x = 0; x < w; ++x) {
      double acc = 0, norm = 0;
      for (int j = -r; j <= r; ++j) {
        if (y + j < 0 || y + j >= h) continue;
        for (int i = -r; i <= r; ++i) {
          if (x + i < 0 || x + i >= w) continue;
          const double wt = std::exp(-(i * i + j * j) / (2.0 * s * s));
          acc += wt * img.at(x + i, y + j)[0];
          norm += wt;
        }
      }
      ASSERT_NEAR(out.at(x, y)[0], acc / norm, 1e-5) << "row " << y << " col " << x;
      if (s == 2 && x > 6 && x < w - 7) {
        EXPECT_NEAR(out.at(x, y)[0], 0.5, 0.05);
      }
    }
  }
  EXPECT_TRUE(saw_sigma2);
}

TEST(TiltShift, FocusOutOfRange) {
  EXPECT_THROW(tilt_shift(RasterImage(4, 10), 10.0), ConfigError);
  EXPECT_THROW(tilt_shift(RasterImage(4, 10), -0.5), ConfigError);
}

TEST(Recipe, ChainsInOrder) {
  const RasterImage src = fixtures::random_scene(3, 80, 60);
  EnhancementRecipe r;
  r.filter = FilterName::Kelvin;
  r.crop_fraction = 0.2;
  r.tilt_shift = true;
  RasterImage expected = smart_crop(apply_filter(src, FilterName::Kelvin), 0.2).first;
  expected = tilt_shift(expected, saliency_center(expected).y);
  EXPECT_EQ(r.apply(src), expected);
  EXPECT_EQ(r.describe(), "Kelvin+crop0.200000+tiltshift");
  EXPECT_TRUE(EnhancementRecipe{}.is_identity());
  EXPECT_EQ(EnhancementRecipe{}.apply(src), src);
}
