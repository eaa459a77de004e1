#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "geocloak/image.hpp"

namespace geocloak {

inline constexpr std::size_t kDescriptorDim = 128;

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double scale = 1.0;
  double orientation = 0.0;  // radians in [0, 2pi)

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

// Keypoints with parallel, unit-norm, non-negative 128-d descriptors.
struct FeatureSet {
  std::string image_id;
  std::vector<Keypoint> keypoints;
  std::vector<double> descriptors;  // row-major, size() * kDescriptorDim

  std::size_t size() const { return keypoints.size(); }
  bool empty() const { return keypoints.empty(); }

  std::span<const double> descriptor(std::size_t i) const {
    return std::span<const double>(descriptors).subspan(i * kDescriptorDim, kDescriptorDim);
  }

  void push_back(const Keypoint& kp, std::span<const double> desc);

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;
};

struct ExtractionParams {
  int octaves = 4;
  int scales_per_octave = 3;
  double base_sigma = 1.6;
  // Minimum |DoG| at the refined extremum, image values in [0, 1].
  double contrast_threshold = 0.03;
  // Principal-curvature ratio limit.
  double edge_ratio = 10.0;
};

inline constexpr int kMinExtractionSide = 32;

class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual FeatureSet extract(const RasterImage& img, std::string image_id) const = 0;
};

// Difference-of-Gaussians detector with a gradient-histogram descriptor
// (4x4 cells x 8 orientations).
class DogExtractor final : public FeatureExtractor {
 public:
  explicit DogExtractor(ExtractionParams params = {}) : params_(params) {}
  FeatureSet extract(const RasterImage& img, std::string image_id) const override;

  const ExtractionParams& params() const { return params_; }

 private:
  ExtractionParams params_;
};

// Throws DegenerateInputError for images smaller than 32x32.
FeatureSet extract_features(const RasterImage& img, const ExtractionParams& params = {},
                            std::string image_id = {});

struct SyntheticLayout {
  double width = 640.0;
  double height = 480.0;
  double min_scale = 1.6;
  double max_scale = 12.8;
};

// Deterministic pseudo-random keypoints and descriptors for a seed.
FeatureSet synthetic_features(std::uint64_t seed, std::size_t n, const SyntheticLayout& layout = {},
                              std::string image_id = {});

// Scales v to unit length, clips entries at `clip` and renormalizes.
// Zero vectors are left untouched.
void normalize_descriptor(std::span<double> v, double clip = 1.0);

// Binary feature dump, magic "GCFT1":
//   magic | u32 id_len | id bytes | u32 count | count x 4 f64 (x, y, scale,
//   orientation) | count x 128 f64 descriptors
void write_features(const FeatureSet& fs, const std::filesystem::path& path);
FeatureSet read_features(const std::filesystem::path& path);

}  // namespace geocloak
