#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "geocloak/features.hpp"
#include "geocloak/geo.hpp"
#include "geocloak/image.hpp"
#include "geocloak/index.hpp"
#include "geocloak/vocab.hpp"

namespace geocloak::fixtures {

// Random blobs and bars over a smooth gradient; different seeds give
// unrelated scenes.
RasterImage random_scene(std::uint64_t seed, int width, int height);

// A width x height window of the scene at (dx, dy).
RasterImage scene_view(std::uint64_t seed, int scene_w, int scene_h, int dx, int dy, int width,
                       int height);

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& prefix);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Synthetic corpus with per-location shared structure: every image of a
// location reuses a location-specific pool of keypoints/descriptors, moved by
// a small similarity transform and descriptor noise, mixed with clutter.
struct LocationCorpus {
  std::vector<ImageRecord> background;
  std::vector<GeoPoint> locations;
};

LocationCorpus location_corpus(std::uint64_t seed, std::size_t locations, std::size_t per_location,
                               std::size_t features_per_image);

// Random descriptors per image, no shared structure.
std::vector<ImageRecord> random_corpus(std::uint64_t seed, std::size_t images,
                                       std::size_t max_features);

// Vocabulary trained on the images' descriptors.
VisualVocabulary corpus_vocabulary(const std::vector<ImageRecord>& images, std::size_t k,
                                   std::uint64_t seed, std::size_t max_descriptors = 0);

}  // namespace geocloak::fixtures
