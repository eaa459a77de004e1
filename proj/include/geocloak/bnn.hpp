#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geocloak/binary_io.hpp"
#include "geocloak/features.hpp"
#include "geocloak/geo.hpp"
#include "geocloak/rng.hpp"
#include "geocloak/vocab.hpp"

namespace geocloak {

// L2-normalized word-count vector. Featureless images give a zero vector
// with `empty` set.
struct BowHistogram {
  std::string image_id;
  std::vector<double> values;
  bool empty = true;
};

BowHistogram bow_histogram(const FeatureSet& features, const VisualVocabulary& vocab);

struct KdForestParams {
  int trees = 4;
  std::size_t leaf_size = 8;
  std::size_t top_variance_dims = 5;
  std::uint64_t seed = 42;
};

inline constexpr std::size_t kDefaultMaxChecks = 64;

struct NeighborHit {
  std::uint32_t point = 0;
  double squared_distance = 0.0;

  friend bool operator==(const NeighborHit&, const NeighborHit&) = default;
};

// Randomized kd-trees searched best-first with one priority queue shared by
// all trees. Each node splits at the median of a dimension drawn from the
// five highest-variance dimensions of its points.
class KdForest {
 public:
  KdForest() = default;
  // `points` is row-major n x dim and must outlive the forest.
  KdForest(std::span<const double> points, std::size_t dim, const KdForestParams& params = {});

  std::size_t size() const { return n_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return n_ == 0; }

  // Best candidate seen after scanning at most max_checks leaves, counting
  // only leaves that held a not-yet-evaluated point; exact when
  // max_checks >= size(). Ties go to the lower point index.
  // Throws DataError on an empty forest.
  NeighborHit nearest(std::span<const double> query, std::size_t max_checks = kDefaultMaxChecks) const;

  // The k best candidates under the same budget, nearest first.
  std::vector<NeighborHit> nearest_k(std::span<const double> query, std::size_t k,
                                     std::size_t max_checks) const;

  // For invariant checks: every point appears in exactly one leaf per tree.
  std::vector<std::vector<std::uint32_t>> leaves_of_tree(int tree) const;
  int tree_count() const { return static_cast<int>(roots_.size()); }

 private:
  struct Node {
    std::int32_t left = -1;  // -1 marks a leaf
    std::int32_t right = -1;
    std::uint32_t dim = 0;
    double split = 0.0;
    std::uint32_t begin = 0;  // leaf range into leaf_points_
    std::uint32_t end = 0;
  };

  std::int32_t build_node(std::vector<std::uint32_t>& idx, std::size_t begin, std::size_t end,
                          Rng& rng);
  // Best-first traversal; `pool` keeps the best candidates found so far.
  void search(std::span<const double> query, std::size_t max_checks, std::size_t k,
              std::vector<NeighborHit>& pool) const;

  std::span<const double> points_;
  std::size_t dim_ = 0;
  std::size_t n_ = 0;
  KdForestParams params_;
  std::vector<Node> nodes_;
  std::vector<std::int32_t> roots_;
  std::vector<std::uint32_t> leaf_points_;
};

// Exhaustive nearest neighbour with the same tie rule; the test oracle.
NeighborHit linear_scan_nearest(std::span<const double> points, std::size_t dim,
                                std::span<const double> query);

// Background collection for the baseline: histograms of the non-empty images
// plus their coordinates, and the forest over them.
class BnnIndex {
 public:
  struct Entry {
    std::string id;
    GeoPoint location;
  };

  BnnIndex(std::shared_ptr<const VisualVocabulary> vocab, const KdForestParams& params = {});
  BnnIndex(const BnnIndex&) = delete;
  BnnIndex& operator=(const BnnIndex&) = delete;

  // Adds an image; featureless images are counted but not indexed.
  void add(std::string id, const FeatureSet& features, const GeoPoint& location);
  void add_histogram(BowHistogram hist, const GeoPoint& location);
  // Replaces the histogram of an existing id (featureless replacements are
  // dropped from the searchable set). Throws DataError for unknown ids.
  void replace(const std::string& id, const FeatureSet& features);
  // Builds the forest; call after the last add/replace.
  void build();

  const VisualVocabulary& vocabulary() const { return *vocab_; }
  std::shared_ptr<const VisualVocabulary> vocabulary_ptr() const { return vocab_; }
  const KdForestParams& params() const { return params_; }
  // All ingested images, including featureless ones.
  std::size_t collection_size() const { return entries_.size(); }
  std::size_t searchable_size() const { return forest_.size(); }
  const Entry& entry(std::size_t i) const { return entries_[i]; }
  std::span<const double> histogram(std::size_t i) const;
  bool is_empty(std::size_t i) const { return empty_[i] != 0; }

  // Entry index of the baseline's top-1 neighbour; nullopt means abstain
  // (featureless query). Throws DataError when nothing is searchable.
  std::optional<std::size_t> search(const BowHistogram& q,
                                    std::size_t max_checks = kDefaultMaxChecks) const;
  std::vector<std::size_t> search_k(const BowHistogram& q, std::size_t k,
                                    std::size_t max_checks) const;

  std::unique_ptr<BnnIndex> clone() const;

  void write(BinaryWriter& w) const;
  static std::unique_ptr<BnnIndex> read(BinaryReader& r);

 private:
  std::shared_ptr<const VisualVocabulary> vocab_;
  KdForestParams params_;
  std::vector<Entry> entries_;
  std::vector<double> histograms_;  // entries x k
  std::vector<std::uint8_t> empty_;
  std::vector<double> searchable_;  // non-empty rows only
  std::vector<std::uint32_t> searchable_to_entry_;
  KdForest forest_;
  bool built_ = false;
};

// Top-1 id from the forest; nullopt for an empty query histogram.
std::optional<std::string> bnn_search(const BnnIndex& index, const BowHistogram& q,
                                      std::size_t max_checks = kDefaultMaxChecks);

}  // namespace geocloak
