#include "geocloak/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_map>

#include "geocloak/error.hpp"
#include "geocloak/manifest.hpp"

namespace geocloak {

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Correct: return "correct";
    case Verdict::Incorrect: return "incorrect";
    case Verdict::Abstain: return "abstain";
  }
  return "abstain";
}

Verdict parse_verdict(std::string_view s) {
  if (s == "correct") return Verdict::Correct;
  if (s == "incorrect") return Verdict::Incorrect;
  if (s == "abstain") return Verdict::Abstain;
  throw MalformedHeaderError("unknown verdict '" + std::string(s) + "'");
}

std::string format_percent(long long numerator, long long denominator) {
  if (denominator <= 0) throw UndefinedMetricError("percentage of an empty set");
  const bool negative = numerator < 0;
  const long long num = negative ? -numerator : numerator;
  // Hundredths of a percent, rounded half up: floor((10000 n + d/2) / d)
  // done as floor((20000 n + d) / 2d).
  const long long scaled = (20000 * num + denominator) / (2 * denominator);
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%lld.%02lld", negative && scaled != 0 ? "-" : "", scaled / 100,
                scaled % 100);
  return buf;
}

double EvalReport::percent() const {
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

std::string EvalReport::percent_text() const {
  return format_percent(static_cast<long long>(correct), static_cast<long long>(total));
}

std::set<std::string> EvalReport::correct_ids() const {
  std::set<std::string> ids;
  for (const auto& v : verdicts)
    if (v.verdict == Verdict::Correct) ids.insert(v.target_id);
  return ids;
}

EvalReport percent_correct(std::span<const GlePrediction> predictions, const GroundTruth& truth,
                           double radius_m) {
  if (!(radius_m >= 0.0)) throw ConfigError("radius must be non-negative");
  EvalReport report;
  report.radius_m = radius_m;
  report.total = predictions.size();
  report.verdicts.reserve(predictions.size());
  for (const auto& p : predictions) {
    const auto it = truth.find(p.target_id);
    if (it == truth.end()) throw DataError("no ground truth for target '" + p.target_id + "'");
    TargetVerdict v;
    v.target_id = p.target_id;
    if (p.abstained()) {
      v.verdict = Verdict::Abstain;
    } else {
      const double d = haversine_m(*p.predicted, it->second);
      v.distance_m = d;
      v.verdict = d <= radius_m ? Verdict::Correct : Verdict::Incorrect;
    }
    if (v.verdict == Verdict::Correct) ++report.correct;
    report.verdicts.push_back(std::move(v));
  }
  return report;
}

SplitReport split_report(const EvalReport& report, const TargetSplit& split) {
  const std::set<std::string> tagged(split.tagged.begin(), split.tagged.end());
  SplitReport out;
  out.tagged.radius_m = out.tagless.radius_m = report.radius_m;
  for (const auto& v : report.verdicts) {
    EvalReport& part = tagged.contains(v.target_id) ? out.tagged : out.tagless;
    ++part.total;
    if (v.verdict == Verdict::Correct) ++part.correct;
    part.verdicts.push_back(v);
  }
  return out;
}

namespace {

std::string fixed1(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

}  // namespace

std::string CloakReport::net_text() const { return fixed1(net); }
std::string CloakReport::gross_text() const { return fixed1(gross); }

CloakReport cloak_metrics(const EvalReport& before, const EvalReport& after) {
  if (before.radius_m != after.radius_m)
    throw ConfigError("cloaking reports use different radii");
  CloakReport r;
  r.before = before.correct_ids();
  r.after = after.correct_ids();
  if (r.before.empty())
    throw UndefinedMetricError("no target was correctly located before enhancement");
  const double b = static_cast<double>(r.before.size());
  std::size_t lost = 0;
  for (const auto& id : r.before)
    if (!r.after.contains(id)) ++lost;
  r.net = 100.0 * (b - static_cast<double>(r.after.size())) / b;
  r.gross = 100.0 * static_cast<double>(lost) / b;
  return r;
}

std::size_t HeatmapGrid::total() const {
  std::size_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

HeatmapGrid heatmap_grid(const EvalReport& report, const GroundTruth& truth, double cell_size_m) {
  if (!(cell_size_m > 0.0)) throw ConfigError("cell size must be positive");
  if (report.verdicts.empty()) throw DataError("heat map over an empty target set");
  std::vector<GeoPoint> points;
  points.reserve(report.verdicts.size());
  for (const auto& v : report.verdicts) {
    const auto it = truth.find(v.target_id);
    if (it == truth.end()) throw DataError("no ground truth for target '" + v.target_id + "'");
    points.push_back(it->second);
  }
  double lat_min = points[0].lat(), lat_max = lat_min;
  double lon_min = points[0].lon(), lon_max = lon_min;
  for (const auto& p : points) {
    lat_min = std::min(lat_min, p.lat());
    lat_max = std::max(lat_max, p.lat());
    lon_min = std::min(lon_min, p.lon());
    lon_max = std::max(lon_max, p.lon());
  }
  HeatmapGrid g;
  g.origin_lat = lat_min;
  g.origin_lon = lon_min;
  g.cell_lat_deg = cell_size_m / kMetersPerDegree;
  const double center_lat = 0.5 * (lat_min + lat_max);
  const double c = std::cos(center_lat * M_PI / 180.0);
  // Near the poles a cell would span all longitudes.
  g.cell_lon_deg = c > 1e-9 ? std::min(360.0, g.cell_lat_deg / c) : 360.0;
  g.rows = static_cast<std::size_t>(std::floor((lat_max - lat_min) / g.cell_lat_deg)) + 1;
  g.cols = static_cast<std::size_t>(std::floor((lon_max - lon_min) / g.cell_lon_deg)) + 1;
  if (g.rows * g.cols > 50'000'000) throw ConfigError("heat map grid too fine for the target extent");
  g.counts.assign(g.rows * g.cols, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (report.verdicts[i].verdict != Verdict::Correct) continue;
    const auto r = std::min(g.rows - 1, static_cast<std::size_t>((points[i].lat() - lat_min) / g.cell_lat_deg));
    const auto col =
        std::min(g.cols - 1, static_cast<std::size_t>((points[i].lon() - lon_min) / g.cell_lon_deg));
    ++g.counts[r * g.cols + col];
  }
  return g;
}

void write_heatmap_csv(const HeatmapGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "cell_lat,cell_lon,count\n";
  for (std::size_t r = 0; r < grid.rows; ++r)
    for (std::size_t c = 0; c < grid.cols; ++c)
      out << format_degrees(grid.cell_center_lat(r)) << ',' << format_degrees(grid.cell_center_lon(c))
          << ',' << grid.at(r, c) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {

const std::vector<std::string> kReportHeader = {"target_id", "verdict", "distance_m", "radius_m"};

std::string format_meters(double m) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3f", m);
  return buf;
}

}  // namespace

void write_report_csv(std::span<const EvalReport> reports, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "target_id,verdict,distance_m,radius_m\n";
  for (const auto& rep : reports)
    for (const auto& v : rep.verdicts)
      out << v.target_id << ',' << to_string(v.verdict) << ','
          << (v.distance_m ? format_meters(*v.distance_m) : std::string()) << ','
          << format_meters(rep.radius_m) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<EvalReport> read_report_csv(const std::filesystem::path& path) {
  const auto rows = read_csv(path, kReportHeader);
  std::vector<EvalReport> reports;
  for (const auto& row : rows) {
    const double radius = parse_double(row[3], "radius_m");
    auto it = std::find_if(reports.begin(), reports.end(),
                           [&](const EvalReport& r) { return r.radius_m == radius; });
    if (it == reports.end()) {
      reports.emplace_back();
      reports.back().radius_m = radius;
      it = reports.end() - 1;
    }
    TargetVerdict v;
    v.target_id = row[0];
    v.verdict = parse_verdict(row[1]);
    if (!row[2].empty()) v.distance_m = parse_double(row[2], "distance_m");
    ++it->total;
    if (v.verdict == Verdict::Correct) ++it->correct;
    it->verdicts.push_back(std::move(v));
  }
  return reports;
}

namespace {

RasterImage load_pixels(const ExperimentImage& img) {
  if (!img.pixels) throw DataError("no pixel data for image '" + img.id + "'");
  return img.pixels();
}

}  // namespace

FilteredBackgroundResult filtered_background_experiment(std::span<const ExperimentImage> background,
                                                        std::span<const ExperimentImage> targets,
                                                        const FilteredBackgroundConfig& config) {
  if (!config.vocab) throw ConfigError("experiment needs a vocabulary");
  const auto enhance = [&](const RasterImage& img) {
    return config.enhancement ? config.enhancement(img) : img;
  };

  BnnIndex base(config.vocab, config.forest);
  for (const auto& b : background)
    base.add(b.id, extract_features(load_pixels(b), config.extraction, b.id), b.location);
  base.build();

  GroundTruth truth;
  for (const auto& t : targets) truth.insert_or_assign(t.id, t.location);

  GleOptions opts;
  opts.max_checks = config.max_checks;
  const GeoLocator original(GeoIndexBundle{nullptr, std::shared_ptr<const BnnIndex>(base.clone())}, opts);

  FilteredBackgroundResult result;
  result.collection_size = base.collection_size();
  // Enhancement is deterministic, so each background image is filtered and
  // re-extracted at most once across targets.
  std::unordered_map<std::size_t, FeatureSet> enhanced_cache;
  const std::size_t checks = std::max(config.max_checks, config.neighbors);

  for (const auto& t : targets) {
    const RasterImage target_pixels = load_pixels(t);
    const FeatureSet plain = extract_features(target_pixels, config.extraction, t.id);
    const FeatureSet filtered = extract_features(enhance(target_pixels), config.extraction, t.id);

    std::vector<std::size_t> neighbours;
    const BowHistogram q = bow_histogram(plain, *config.vocab);
    if (!q.empty && base.searchable_size() > 0) neighbours = base.search_k(q, config.neighbors, checks);

    std::unique_ptr<BnnIndex> patched = base.clone();
    for (std::size_t e : neighbours) {
      auto it = enhanced_cache.find(e);
      if (it == enhanced_cache.end()) {
        const ExperimentImage& b = background[e];
        it = enhanced_cache
                 .emplace(e, extract_features(enhance(load_pixels(b)), config.extraction, b.id))
                 .first;
      }
      patched->replace(base.entry(e).id, it->second);
    }
    patched->build();
    result.patched_collection_sizes.push_back(patched->collection_size());

    const GeoLocator filtered_bg(GeoIndexBundle{nullptr, std::shared_ptr<const BnnIndex>(std::move(patched))},
                                 opts);
    result.original_predictions.push_back(original.geolocate(filtered, System::Bnn));
    result.filtered_predictions.push_back(filtered_bg.geolocate(filtered, System::Bnn));
  }

  for (double r : config.radii) {
    result.original_background.push_back(percent_correct(result.original_predictions, truth, r));
    result.filtered_background.push_back(percent_correct(result.filtered_predictions, truth, r));
  }
  return result;
}

}  // namespace geocloak
