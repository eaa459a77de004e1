#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "geocloak/binary_io.hpp"
#include "geocloak/features.hpp"
#include "geocloak/geo.hpp"
#include "geocloak/vocab.hpp"

namespace geocloak {

inline constexpr std::uint32_t kHammingThreshold = 24;
inline constexpr double kHammingSigma = 16.0;

// A background image as ingested by the index builders.
struct ImageRecord {
  std::string id;
  FeatureSet features;
  GeoPoint location;
  std::vector<std::string> tags;
};

struct ImageMeta {
  std::string id;
  GeoPoint location;
  std::vector<std::string> tags;
  std::vector<Keypoint> keypoints;  // one per indexed descriptor

  std::size_t descriptor_count() const { return keypoints.size(); }
};

// Postings of one visual word, sorted by (image, feature).
struct PostingList {
  std::vector<std::uint32_t> images;
  std::vector<std::uint32_t> features;
  std::vector<Signature> signatures;

  std::size_t size() const { return images.size(); }
};

// One (query descriptor, database descriptor) pair that passed the
// Hamming test.
struct Match {
  std::uint32_t query_idx = 0;
  std::uint32_t db_feature = 0;
  WordId word = 0;
  std::uint8_t hamming = 0;

  friend bool operator==(const Match&, const Match&) = default;
};

struct RankedMatch {
  std::string image_id;
  std::uint32_t image = 0;  // ordinal inside the index
  double score = 0.0;
  std::vector<Match> matches;  // sorted by (query_idx, db_feature)
  // Filled in by geometric re-ranking.
  std::size_t consistent_pairs = 0;
  std::size_t inliers = 0;
};

// Weight of a matching pair before burstiness and length normalization.
double match_weight(double idf, std::uint32_t hamming);

// Inverted file over visual words carrying Hamming-embedding signatures.
// Images are ordered by id, so image ordinals and ids sort the same way.
// Immutable once built; const member functions are safe to call
// concurrently.
class BowIndex {
 public:
  std::shared_ptr<const VisualVocabulary> vocabulary() const { return vocab_; }
  std::size_t image_count() const { return images_.size(); }
  std::size_t posting_count() const;
  const ImageMeta& image(std::uint32_t ordinal) const { return images_[ordinal]; }
  std::span<const ImageMeta> images() const { return images_; }
  const PostingList& postings(WordId w) const { return postings_[w]; }
  // Ordinal of an id, or -1.
  std::int64_t find(const std::string& id) const;

  // Ranked candidates: multiple assignment on the query side, matches need a
  // Hamming distance <= 24, pair weight idf^2 exp(-h^2 / (2 * 16^2)), pairs
  // of one query descriptor with m descriptors of the same image are divided
  // by sqrt(m), and image scores are divided by sqrt(descriptor count).
  // Sorted by descending score then ascending id; only images with at least
  // one match are returned.
  std::vector<RankedMatch> query(const FeatureSet& q, std::size_t top_k) const;

  // Same, after checking that `vocab` is the vocabulary the index was built
  // with (ConfigError otherwise).
  std::vector<RankedMatch> query(const FeatureSet& q, std::size_t top_k,
                                 const VisualVocabulary& vocab) const;

  void write(BinaryWriter& w) const;
  static BowIndex read(BinaryReader& r);

 private:
  friend class BowIndexBuilder;

  std::shared_ptr<const VisualVocabulary> vocab_;
  std::vector<ImageMeta> images_;
  std::vector<PostingList> postings_;
  std::unordered_map<std::string, std::uint32_t> by_id_;
};

// Streaming construction; keeps only signatures and keypoints per image.
class BowIndexBuilder {
 public:
  explicit BowIndexBuilder(std::shared_ptr<const VisualVocabulary> vocab);

  // Throws IngestionError on a duplicate id.
  void add(std::string id, const FeatureSet& features, const GeoPoint& location,
           std::vector<std::string> tags = {});
  std::size_t size() const { return images_.size(); }

  BowIndex finish() &&;

 private:
  std::shared_ptr<const VisualVocabulary> vocab_;
  std::vector<ImageMeta> images_;
  std::vector<PostingList> postings_;
  std::unordered_map<std::string, std::uint32_t> seen_;
};

BowIndex build_index(std::span<const ImageRecord> records,
                     std::shared_ptr<const VisualVocabulary> vocab);

// Exhaustive evaluation of the same scoring rule without the inverted file.
std::vector<RankedMatch> brute_force_score(std::span<const ImageRecord> records,
                                           const VisualVocabulary& vocab, const FeatureSet& q,
                                           std::size_t top_k = SIZE_MAX);

}  // namespace geocloak
