#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geocloak/bnn.hpp"
#include "geocloak/features.hpp"
#include "geocloak/geo.hpp"
#include "geocloak/index.hpp"
#include "geocloak/pgm.hpp"

namespace geocloak {

enum class System { Bnn, Pgm };

std::string_view to_string(System s);
std::optional<System> parse_system(std::string_view name);

struct GlePrediction {
  std::string target_id;
  System system = System::Pgm;
  std::optional<GeoPoint> predicted;           // empty means abstain
  std::optional<std::string> propagator_id;    // set iff predicted is set
  double score = 0.0;                          // retrieval score of the propagator
  std::size_t consistent_pairs = 0;            // PGM only
  std::string error;                           // ingestion failure, if any

  bool abstained() const { return !predicted.has_value(); }
};

struct GleOptions {
  std::size_t top_k = 100;
  // The PGM top-1 must have at least this many geometric inliers to be
  // used as a propagator; otherwise the engine abstains.
  std::size_t min_inliers = 4;
  std::size_t max_checks = kDefaultMaxChecks;
  PgmParams pgm;
};

// The searchable background: the inverted index for PGM and, optionally, the
// histogram forest for the baseline.
struct GeoIndexBundle {
  std::shared_ptr<const BowIndex> bow;
  std::shared_ptr<const BnnIndex> bnn;
};

// File layout, magic "GCIX1": magic | BowIndex payload | u8 has_bnn |
// BnnIndex payload when present.
void save_bundle(const GeoIndexBundle& bundle, const std::filesystem::path& path);
GeoIndexBundle load_bundle(const std::filesystem::path& path);

// Top-1 geo-propagation. Immutable; safe to share between threads.
class GeoLocator {
 public:
  explicit GeoLocator(GeoIndexBundle bundle, GleOptions options = {});

  GlePrediction geolocate(const FeatureSet& target, System system) const;

  const GleOptions& options() const { return options_; }
  const GeoIndexBundle& bundle() const { return bundle_; }

 private:
  GlePrediction locate_pgm(const FeatureSet& target) const;
  GlePrediction locate_bnn(const FeatureSet& target) const;

  GeoIndexBundle bundle_;
  GleOptions options_;
};

struct BatchTarget {
  std::string id;
  // Produces the target's features; may throw IngestionError/DataError.
  std::function<FeatureSet()> load;
};

struct BatchResult {
  std::vector<GlePrediction> predictions;  // manifest order
  std::vector<double> millis;              // per-target wall time
  std::size_t failed = 0;                  // rows whose load threw
};

// Runs the targets on up to `threads` workers against the shared locator.
BatchResult geolocate_batch(const GeoLocator& locator, std::span<const BatchTarget> targets,
                            System system, unsigned threads = 1);

}  // namespace geocloak
