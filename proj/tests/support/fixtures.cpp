#include "support/fixtures.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <numbers>

#include "geocloak/rng.hpp"

namespace geocloak::fixtures {

RasterImage random_scene(std::uint64_t seed, int width, int height) {
  Rng rng(seed);
  RasterImage img(width, height);
  const Rgb c0 = {float(rng.uniform()), float(rng.uniform()), float(rng.uniform())};
  const Rgb c1 = {float(rng.uniform()), float(rng.uniform()), float(rng.uniform())};
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const float t = float(x + y) / float(width + height);
      img.set(x, y, {c0[0] + t * (c1[0] - c0[0]), c0[1] + t * (c1[1] - c0[1]), c0[2] + t * (c1[2] - c0[2])});
    }
  const int shapes = 20 + static_cast<int>(width * height / 250);
  for (int s = 0; s < shapes; ++s) {
    const Rgb col = {float(rng.uniform()), float(rng.uniform()), float(rng.uniform())};
    const double cx = rng.uniform(0, width), cy = rng.uniform(0, height);
    const double r = rng.uniform(2.0, std::max(5.0, std::min(width, height) / 12.0));
    const bool disc = rng.uniform() < 0.5;
    const double ang = rng.uniform(0, std::numbers::pi);
    const double ca = std::cos(ang), sa = std::sin(ang);
    const int x0 = std::max(0, int(cx - 2 * r)), x1 = std::min(width - 1, int(cx + 2 * r));
    const int y0 = std::max(0, int(cy - 2 * r)), y1 = std::min(height - 1, int(cy + 2 * r));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
        bool inside;
        if (disc) {
          inside = dx * dx + dy * dy <= r * r;
        } else {
          const double u = ca * dx + sa * dy, v = -sa * dx + ca * dy;
          inside = std::abs(u) <= r && std::abs(v) <= r * 0.4;
        }
        if (inside) img.set(x, y, col);
      }
  }
  return img;
}

RasterImage scene_view(std::uint64_t seed, int scene_w, int scene_h, int dx, int dy, int width,
                       int height) {
  const RasterImage scene = random_scene(seed, scene_w, scene_h);
  RasterImage out(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      out.set(x, y, scene.at(std::clamp(x + dx, 0, scene_w - 1), std::clamp(y + dy, 0, scene_h - 1)));
  return out;
}

TempDir::TempDir(const std::string& prefix) {
  static std::uint64_t counter = 0;
  Rng rng(static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count()) + counter++);
  path_ = std::filesystem::temp_directory_path() / (prefix + "-" + std::to_string(rng.next_u64() % 1000000000));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

LocationCorpus location_corpus(std::uint64_t seed, std::size_t locations, std::size_t per_location,
                               std::size_t features_per_image) {
  LocationCorpus corpus;
  Rng rng(seed);
  for (std::size_t l = 0; l < locations; ++l) {
    // Locations tens of kilometers apart.
    corpus.locations.emplace_back(40.0 + 0.5 * double(l), -3.0 + 0.3 * double(l));
    const FeatureSet pool = synthetic_features(seed * 1000 + l, features_per_image);
    for (std::size_t i = 0; i < per_location; ++i) {
      ImageRecord rec;
      char id[64];
      std::snprintf(id, sizeof id, "loc%02zu_img%02zu", l, i);
      rec.id = id;
      rec.location = corpus.locations.back();
      rec.features.image_id = rec.id;
      const double theta = rng.uniform(-0.3, 0.3);
      const double scale = std::exp(rng.uniform(-0.2, 0.2));
      const double tx = rng.uniform(-20, 20), ty = rng.uniform(-20, 20);
      const double c = std::cos(theta), s = std::sin(theta);
      std::vector<double> desc(kDescriptorDim);
      for (std::size_t f = 0; f < pool.size(); ++f) {
        if (rng.uniform() < 0.3) continue;  // occluded in this view
        Keypoint kp = pool.keypoints[f];
        const double x = kp.x - 320, y = kp.y - 240;
        kp.x = scale * (c * x - s * y) + 320 + tx;
        kp.y = scale * (s * x + c * y) + 240 + ty;
        kp.scale *= scale;
        kp.orientation = std::fmod(kp.orientation + theta + 2 * std::numbers::pi, 2 * std::numbers::pi);
        const auto d = pool.descriptor(f);
        for (std::size_t j = 0; j < kDescriptorDim; ++j) desc[j] = std::max(0.0, d[j] + 0.01 * rng.normal());
        normalize_descriptor(desc);
        rec.features.push_back(kp, desc);
      }
      const FeatureSet clutter = synthetic_features(rng.next_u64(), features_per_image / 4);
      for (std::size_t f = 0; f < clutter.size(); ++f) rec.features.push_back(clutter.keypoints[f], clutter.descriptor(f));
      corpus.background.push_back(std::move(rec));
    }
  }
  return corpus;
}

std::vector<ImageRecord> random_corpus(std::uint64_t seed, std::size_t images, std::size_t max_features) {
  Rng rng(seed);
  std::vector<ImageRecord> out;
  for (std::size_t i = 0; i < images; ++i) {
    ImageRecord rec;
    rec.id = "img" + std::to_string(100000 + i);
    rec.location = GeoPoint(rng.uniform(-60, 60), rng.uniform(-180, 180));
    rec.features = synthetic_features(rng.next_u64(), rng.below(max_features + 1), {}, rec.id);
    out.push_back(std::move(rec));
  }
  return out;
}

VisualVocabulary corpus_vocabulary(const std::vector<ImageRecord>& images, std::size_t k,
                                   std::uint64_t seed, std::size_t max_descriptors) {
  std::vector<FeatureSet> sets;
  for (const auto& r : images) sets.push_back(r.features);
  VocabularyTrainingOptions opts;
  opts.k = k;
  opts.seed = seed;
  opts.max_descriptors = max_descriptors;
  return train_vocabulary(sets, opts);
}

}  // namespace geocloak::fixtures
