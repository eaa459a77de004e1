#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "geocloak/binary_io.hpp"
#include "geocloak/features.hpp"

namespace geocloak {

inline constexpr std::size_t kSignatureBits = 64;
inline constexpr std::size_t kMaxMultiAssign = 5;
inline constexpr double kMultiAssignRatio = 1.5;
inline constexpr int kKMeansMaxIterations = 100;

using WordId = std::uint32_t;
using Signature = std::uint64_t;

struct KMeansResult {
  std::size_t k = 0;
  std::vector<double> centroids;  // k x dim
  std::vector<WordId> assignments;
  // Inertia after every assignment step, initial assignment first.
  std::vector<double> inertia_history;
  int iterations = 0;
};

// Lloyd iterations from a seeded k-means++ start. Stops when assignments do
// not change or after max_iterations updates. Clusters that empty out are
// re-seeded with the point farthest from its own centroid.
// Throws ConfigError when there are fewer points than k.
KMeansResult train_kmeans(std::span<const double> points, std::size_t dim, std::size_t k,
                          std::uint64_t seed, int max_iterations = kKMeansMaxIterations);

// 64 x 128 matrix with orthonormal rows, determined by the seed.
std::vector<double> projection_matrix(std::uint64_t seed);

class VisualVocabulary {
 public:
  VisualVocabulary() = default;
  // Medians default to zero and idf to one until set.
  VisualVocabulary(std::vector<double> centroids, std::uint64_t projection_seed);

  std::size_t k() const { return k_; }
  std::uint64_t projection_seed() const { return projection_seed_; }

  std::span<const double> centroids() const { return centroids_; }
  std::span<const double> centroid(WordId w) const {
    return std::span<const double>(centroids_).subspan(w * kDescriptorDim, kDescriptorDim);
  }
  std::span<const double> idf() const { return idf_; }
  std::span<const double> he_medians() const { return he_medians_; }
  std::span<const double> projection() const { return projection_; }

  void set_idf(std::vector<double> idf);
  void set_he_medians(std::vector<double> medians);

  // Nearest centroid; ties go to the lowest word id.
  WordId assign(std::span<const double> v) const;

  // Up to five nearest words within 1.5x the nearest distance, nearest first.
  std::vector<WordId> multi_assign(std::span<const double> v) const;

  // Projection of v onto the 64 embedding directions.
  std::array<double, kSignatureBits> project(std::span<const double> v) const;

  // Bit i set iff projection_i > median_i(word).
  Signature signature(std::span<const double> v, WordId word) const;
  Signature signature_from_projection(const std::array<double, kSignatureBits>& proj,
                                      WordId word) const;

  bool compatible_with(const VisualVocabulary& other) const {
    return k_ == other.k_ && projection_seed_ == other.projection_seed_;
  }

  friend bool operator==(const VisualVocabulary& a, const VisualVocabulary& b) {
    return a.k_ == b.k_ && a.projection_seed_ == b.projection_seed_ &&
           a.centroids_ == b.centroids_ && a.idf_ == b.idf_ && a.he_medians_ == b.he_medians_;
  }

 private:
  std::size_t k_ = 0;
  std::uint64_t projection_seed_ = 0;
  std::vector<double> centroids_;
  std::vector<double> idf_;
  std::vector<double> he_medians_;  // k x 64
  std::vector<double> projection_;  // 64 x 128
};

// Per-word component-wise median of the projected training descriptors.
// Words without training descriptors get all-zero medians.
std::vector<double> compute_he_medians(const VisualVocabulary& vocab,
                                       std::span<const double> descriptors);

// idf_w = ln(N / max(1, N_w)) where N_w counts images containing word w.
std::vector<double> compute_idf(const VisualVocabulary& vocab,
                                std::span<const FeatureSet> images);

struct VocabularyTrainingOptions {
  std::size_t k = 1000;
  std::uint64_t seed = 42;
  // Cap on descriptors fed to k-means, sampled uniformly by seed; 0 = all.
  std::size_t max_descriptors = 0;
};

// k-means, Hamming-embedding medians and idf from a set of training images.
VisualVocabulary train_vocabulary(std::span<const FeatureSet> images,
                                  const VocabularyTrainingOptions& options);

// Binary format, magic "GCVB1":
//   magic | u32 k | u32 dim | u32 bits | u64 seed | centroids f64[k*dim] |
//   idf f64[k] | medians f64[k*bits]
void save_vocabulary(const VisualVocabulary& vocab, const std::filesystem::path& path);
VisualVocabulary load_vocabulary(const std::filesystem::path& path);

void write_vocabulary(const VisualVocabulary& vocab, BinaryWriter& w);
VisualVocabulary read_vocabulary(BinaryReader& r);

}  // namespace geocloak
