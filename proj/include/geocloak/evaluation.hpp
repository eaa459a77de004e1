#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "geocloak/bnn.hpp"
#include "geocloak/features.hpp"
#include "geocloak/geo.hpp"
#include "geocloak/gle.hpp"
#include "geocloak/image.hpp"
#include "geocloak/toponym.hpp"

namespace geocloak {

enum class Verdict { Correct, Incorrect, Abstain };

std::string_view to_string(Verdict v);
Verdict parse_verdict(std::string_view s);

struct TargetVerdict {
  std::string target_id;
  Verdict verdict = Verdict::Abstain;
  std::optional<double> distance_m;  // empty for abstentions
};

struct EvalReport {
  double radius_m = 0.0;
  std::size_t total = 0;
  std::size_t correct = 0;
  std::vector<TargetVerdict> verdicts;  // prediction order

  double percent() const;
  // Two decimals, half rounded up, e.g. "7.63".
  std::string percent_text() const;
  std::set<std::string> correct_ids() const;
};

// 100 * numerator / denominator with two decimals, halves rounded away from
// zero, computed exactly in integers.
std::string format_percent(long long numerator, long long denominator);

using GroundTruth = std::map<std::string, GeoPoint>;

// A prediction is correct iff it is not an abstention and lies within
// radius_m (inclusive) of the truth. Throws DataError for targets missing
// from the ground truth.
EvalReport percent_correct(std::span<const GlePrediction> predictions, const GroundTruth& truth,
                           double radius_m);

struct SplitReport {
  EvalReport tagged;
  EvalReport tagless;
};

SplitReport split_report(const EvalReport& report, const TargetSplit& split);

struct CloakReport {
  std::set<std::string> before;  // correct before enhancement (B)
  std::set<std::string> after;   // correct after enhancement (A)
  double net = 0.0;              // 100 (|B| - |A|) / |B|
  double gross = 0.0;            // 100 |B \ A| / |B|

  std::string net_text() const;
  std::string gross_text() const;
};

// Throws UndefinedMetricError when nothing was correct before, ConfigError
// when the radii differ.
CloakReport cloak_metrics(const EvalReport& before, const EvalReport& after);

struct HeatmapGrid {
  double origin_lat = 0.0;  // south-west corner
  double origin_lon = 0.0;
  double cell_lat_deg = 0.0;
  double cell_lon_deg = 0.0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> counts;  // row-major, row 0 at origin_lat

  std::size_t at(std::size_t row, std::size_t col) const { return counts[row * cols + col]; }
  double cell_center_lat(std::size_t row) const { return origin_lat + (row + 0.5) * cell_lat_deg; }
  double cell_center_lon(std::size_t col) const { return origin_lon + (col + 0.5) * cell_lon_deg; }
  std::size_t total() const;
};

// Grids the bounding box of all target truths into cells of cell_size_m
// (longitude step taken at the box's center latitude) and counts correct
// targets per cell. Throws DataError for an empty target set.
HeatmapGrid heatmap_grid(const EvalReport& report, const GroundTruth& truth, double cell_size_m);

void write_heatmap_csv(const HeatmapGrid& grid, const std::filesystem::path& path);

// CSV target_id,verdict,distance_m,radius_m; reports for several radii are
// concatenated.
void write_report_csv(std::span<const EvalReport> reports, const std::filesystem::path& path);
std::vector<EvalReport> read_report_csv(const std::filesystem::path& path);

// Background or target image for the filtered-collection protocol.
struct ExperimentImage {
  std::string id;
  GeoPoint location;
  std::function<RasterImage()> pixels;
};

using Enhancement = std::function<RasterImage(const RasterImage&)>;

struct FilteredBackgroundConfig {
  std::shared_ptr<const VisualVocabulary> vocab;
  Enhancement enhancement;  // empty means identity
  std::vector<double> radii = {100.0, 1000.0};
  std::size_t neighbors = 100;
  std::size_t max_checks = kDefaultMaxChecks;
  ExtractionParams extraction;
  KdForestParams forest;
};

struct FilteredBackgroundResult {
  std::vector<EvalReport> original_background;  // one per radius
  std::vector<EvalReport> filtered_background;
  std::vector<GlePrediction> original_predictions;
  std::vector<GlePrediction> filtered_predictions;
  std::size_t collection_size = 0;
  std::vector<std::size_t> patched_collection_sizes;  // per target
};

// Baseline-system protocol: for each target, the top neighbours of the
// unmodified target are enhanced like the target, re-extracted, and swapped
// into a copy of the collection; the enhanced target is then located against
// the original and the patched collection.
FilteredBackgroundResult filtered_background_experiment(std::span<const ExperimentImage> background,
                                                        std::span<const ExperimentImage> targets,
                                                        const FilteredBackgroundConfig& config);

}  // namespace geocloak
