#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "geocloak/enhance.hpp"
#include "geocloak/error.hpp"
#include "geocloak/evaluation.hpp"
#include "geocloak/rng.hpp"
#include "support/fixtures.hpp"

using namespace geocloak;

namespace {

GlePrediction predict(std::string id, std::optional<GeoPoint> at) {
  GlePrediction p;
  p.target_id = std::move(id);
  p.predicted = at;
  if (at) p.propagator_id = "bg";
  return p;
}

EvalReport report_with_correct(std::vector<std::string> correct, std::vector<std::string> wrong = {},
                               double radius = 100) {
  EvalReport r;
  r.radius_m = radius;
  for (auto& id : correct) r.verdicts.push_back({id, Verdict::Correct, 1.0});
  for (auto& id : wrong) r.verdicts.push_back({id, Verdict::Incorrect, 5000.0});
  r.total = r.verdicts.size();
  r.correct = correct.size();
  return r;
}

// Point `meters` due north along the meridian.
GeoPoint north_of(const GeoPoint& p, double meters) { return GeoPoint(p.lat() + meters / kMetersPerDegree, p.lon()); }
GeoPoint east_of(const GeoPoint& p, double meters) {
  return GeoPoint(p.lat(), p.lon() + meters / (kMetersPerDegree * std::cos(p.lat() * M_PI / 180.0)));
}

}  // namespace

TEST(FormatPercent, KnownValues) {
  EXPECT_EQ(format_percent(153, 2006), "7.63");
  EXPECT_EQ(format_percent(238, 2006), "11.86");
  EXPECT_EQ(format_percent(1, 1), "100.00");
  EXPECT_EQ(format_percent(0, 7), "0.00");
  EXPECT_EQ(format_percent(1, 8), "12.50");
  EXPECT_EQ(format_percent(1, 80000), "0.00");   // 0.00125 -> 0.00
  EXPECT_EQ(format_percent(1, 40000), "0.00");   // 0.0025 -> 0.00
  EXPECT_EQ(format_percent(1, 20000), "0.01");   // 0.005 -> half rounds up
  EXPECT_EQ(format_percent(-1, 4), "-25.00");
  EXPECT_THROW(format_percent(1, 0), UndefinedMetricError);
}

TEST(FormatPercent, MatchesLongDivisionOracle) {
  // Long division to two places; the remainder decides the half-up step.
  Rng rng(1);
  for (int t = 0; t < 5000; ++t) {
    const long long d = 1 + static_cast<long long>(rng.below(5000));
    const long long n = static_cast<long long>(rng.below(static_cast<std::uint64_t>(d) + 1));
    long long hundredths = 10000 * n / d;
    if (2 * (10000 * n % d) >= d) ++hundredths;
    std::ostringstream want;
    want << hundredths / 100 << '.' << (hundredths % 100 < 10 ? "0" : "") << hundredths % 100;
    EXPECT_EQ(format_percent(n, d), want.str()) << n << "/" << d;
  }
}

TEST(PercentCorrect, ExactPredictionsGiveHundred) {
  GroundTruth truth;
  std::vector<GlePrediction> preds;
  for (int i = 0; i < 10; ++i) {
    const GeoPoint p(10 + i, 20 - i);
    truth["t" + std::to_string(i)] = p;
    preds.push_back(predict("t" + std::to_string(i), p));
  }
  const EvalReport r = percent_correct(preds, truth, 100);
  EXPECT_EQ(r.percent_text(), "100.00");
  EXPECT_EQ(r.correct, 10u);
}

TEST(PercentCorrect, BoundaryIsInclusive) {
  const GeoPoint truth_pt(37.8199, -122.4783);
  const GeoPoint pred = north_of(truth_pt, 100.0);
  const double d = haversine_m(pred, truth_pt);
  EXPECT_NEAR(d, 100.0, 1e-6);
  const GroundTruth truth{{"t", truth_pt}};
  const std::vector<GlePrediction> preds{predict("t", pred)};
  EXPECT_EQ(percent_correct(preds, truth, d).correct, 1u);
  EXPECT_EQ(percent_correct(preds, truth, std::nextafter(d, 0.0)).correct, 0u);
  EXPECT_EQ(percent_correct(preds, truth, 100.001).verdicts[0].verdict, Verdict::Correct);
}

TEST(PercentCorrect, AbstainCountsAgainstAndHasNoDistance) {
  const GroundTruth truth{{"a", GeoPoint(0, 0)}, {"b", GeoPoint(1, 1)}};
  const std::vector<GlePrediction> preds{predict("a", GeoPoint(0, 0)), predict("b", std::nullopt)};
  const EvalReport r = percent_correct(preds, truth, 1000);
  EXPECT_EQ(r.total, 2u);
  EXPECT_EQ(r.correct, 1u);
  EXPECT_EQ(r.verdicts[1].verdict, Verdict::Abstain);
  EXPECT_FALSE(r.verdicts[1].distance_m.has_value());
  EXPECT_EQ(r.percent_text(), "50.00");
}

TEST(PercentCorrect, MissingTruthIsDataError) {
  const std::vector<GlePrediction> preds{predict("ghost", GeoPoint(0, 0))};
  EXPECT_THROW(percent_correct(preds, {}, 100), DataError);
  EXPECT_THROW(percent_correct(preds, {{"ghost", GeoPoint(0, 0)}}, -1), ConfigError);
  EXPECT_THROW(format_percent(0, static_cast<long long>(percent_correct({}, {}, 100).total)), UndefinedMetricError);
}

TEST(PercentCorrect, MonotoneInRadius) {
  Rng rng(2);
  GroundTruth truth;
  std::vector<GlePrediction> preds;
  for (int i = 0; i < 300; ++i) {
    const GeoPoint t(rng.uniform(-60, 60), rng.uniform(-170, 170));
    const std::string id = "t" + std::to_string(i);
    truth[id] = t;
    if (rng.below(5) == 0) {
      preds.push_back(predict(id, std::nullopt));
    } else {
      preds.push_back(predict(id, north_of(t, rng.uniform(0, 3000))));
    }
  }
  std::set<std::string> prev;
  for (double r : {0.0, 50.0, 100.0, 500.0, 1000.0, 2500.0, 1e7}) {
    const auto ids = percent_correct(preds, truth, r).correct_ids();
    for (const auto& id : prev) EXPECT_TRUE(ids.contains(id)) << id << " lost at " << r;
    prev = ids;
  }
}

TEST(Split, SubReportsPartitionCounts) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    std::vector<std::string> correct, wrong;
    TargetSplit split;
    for (int i = 0; i < 50; ++i) {
      const std::string id = "x" + std::to_string(i);
      (rng.below(3) == 0 ? correct : wrong).push_back(id);
      (rng.below(2) == 0 ? split.tagged : split.tagless).push_back(id);
    }
    const EvalReport r = report_with_correct(correct, wrong);
    const SplitReport s = split_report(r, split);
    EXPECT_EQ(s.tagged.correct + s.tagless.correct, r.correct);
    EXPECT_EQ(s.tagged.total + s.tagless.total, r.total);
    EXPECT_EQ(s.tagged.total, split.tagged.size());
    EXPECT_EQ(s.tagged.radius_m, r.radius_m);
  }
}

TEST(Cloak, WorkedCases) {
  auto c = cloak_metrics(report_with_correct({"a", "b", "c", "d"}), report_with_correct({"a", "b"}, {"c", "d"}));
  EXPECT_DOUBLE_EQ(c.net, 50.0);
  EXPECT_DOUBLE_EQ(c.gross, 50.0);
  c = cloak_metrics(report_with_correct({"a", "b", "c", "d"}, {"e"}), report_with_correct({"a", "b", "c", "d", "e"}));
  EXPECT_DOUBLE_EQ(c.net, -25.0);
  EXPECT_DOUBLE_EQ(c.gross, 0.0);
  EXPECT_EQ(c.net_text(), "-25.0");
  c = cloak_metrics(report_with_correct({"a"}, {"b"}), report_with_correct({"b"}, {"a"}));
  EXPECT_DOUBLE_EQ(c.net, 0.0);
  EXPECT_DOUBLE_EQ(c.gross, 100.0);
  EXPECT_EQ(c.gross_text(), "100.0");
}

TEST(Cloak, ErrorsForEmptyBeforeAndRadiusMismatch) {
  EXPECT_THROW(cloak_metrics(report_with_correct({}, {"a"}), report_with_correct({"a"})), UndefinedMetricError);
  EXPECT_THROW(cloak_metrics(report_with_correct({"a"}, {}, 100), report_with_correct({"a"}, {}, 1000)), ConfigError);
}

TEST(Cloak, GrossBoundsNetOnRandomSets) {
  Rng rng(4);
  for (int t = 0; t < 2000; ++t) {
    std::vector<std::string> b, nb, a, na;
    for (int i = 0; i < 12; ++i) {
      const std::string id(1, static_cast<char>('a' + i));
      (rng.below(2) ? b : nb).push_back(id);
      (rng.below(2) ? a : na).push_back(id);
    }
    if (b.empty()) continue;
    const auto c = cloak_metrics(report_with_correct(b, nb), report_with_correct(a, na));
    std::size_t lost = 0;
    for (const auto& id : b) lost += std::find(a.begin(), a.end(), id) == a.end();
    EXPECT_DOUBLE_EQ(c.gross, 100.0 * lost / b.size());
    EXPECT_DOUBLE_EQ(c.net, 100.0 * (double(b.size()) - double(a.size())) / b.size());
    EXPECT_GE(c.gross, c.net);
    EXPECT_GE(c.gross, 0.0);
    EXPECT_LE(c.gross, 100.0);
  }
}

TEST(Heatmap, SingleCorrectTarget) {
  const GroundTruth truth{{"a", GeoPoint(45, 7)}};
  const auto g = heatmap_grid(report_with_correct({"a"}), truth, 500);
  EXPECT_EQ(g.rows, 1u);
  EXPECT_EQ(g.cols, 1u);
  EXPECT_EQ(g.at(0, 0), 1u);
}

TEST(Heatmap, ThreeAndOneAtOracleCells) {
  // Cells are 500 m; targets placed well inside cells (0,0) and (1,2).
  const GeoPoint sw(48.0, 2.0);
  const double cell_lat = 500.0 / kMetersPerDegree;
  GroundTruth truth{{"sw", sw}};
  // Bounding box: sw to a point 3.5 cells north and 4.5 cells east; the
  // longitude step follows the box's center latitude.
  const GeoPoint ne(sw.lat() + 3.5 * cell_lat, 0);
  const double center = 0.5 * (sw.lat() + ne.lat());
  const double cell_lon = cell_lat / std::cos(center * M_PI / 180.0);
  truth["ne"] = GeoPoint(ne.lat(), sw.lon() + 4.5 * cell_lon);
  truth["a"] = GeoPoint(sw.lat() + 0.2 * cell_lat, sw.lon() + 0.3 * cell_lon);
  truth["b"] = GeoPoint(sw.lat() + 0.7 * cell_lat, sw.lon() + 0.6 * cell_lon);
  truth["c"] = GeoPoint(sw.lat() + 0.5 * cell_lat, sw.lon() + 0.9 * cell_lon);
  truth["d"] = GeoPoint(sw.lat() + 1.5 * cell_lat, sw.lon() + 2.5 * cell_lon);
  const auto g = heatmap_grid(report_with_correct({"a", "b", "c", "d"}, {"sw", "ne"}), truth, 500);
  EXPECT_EQ(g.rows, 4u);
  EXPECT_EQ(g.cols, 5u);
  EXPECT_NEAR(g.cell_lat_deg, cell_lat, 1e-15);
  EXPECT_NEAR(g.cell_lon_deg, cell_lon, 1e-12);
  EXPECT_EQ(g.at(0, 0), 3u);
  EXPECT_EQ(g.at(1, 2), 1u);
  EXPECT_EQ(g.total(), 4u);
}

TEST(Heatmap, AllIncorrectIsZeroAndSumsMatch) {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    GroundTruth truth;
    std::vector<std::string> correct, wrong;
    const GeoPoint base(rng.uniform(-50, 50), rng.uniform(-150, 150));
    for (int i = 0; i < 40; ++i) {
      const std::string id = "p" + std::to_string(i);
      truth[id] = east_of(north_of(base, rng.uniform(0, 5000)), rng.uniform(0, 5000));
      (t % 5 == 0 || rng.below(2) ? wrong : correct).push_back(id);
    }
    const auto g = heatmap_grid(report_with_correct(correct, wrong), truth, 250);
    EXPECT_EQ(g.total(), correct.size());
    EXPECT_EQ(g.counts.size(), g.rows * g.cols);
  }
}

TEST(Heatmap, ErrorsAndCsv) {
  EXPECT_THROW(heatmap_grid(EvalReport{}, {}, 500), DataError);
  EXPECT_THROW(heatmap_grid(report_with_correct({"a"}), {}, 500), DataError);
  EXPECT_THROW(heatmap_grid(report_with_correct({"a"}), {{"a", GeoPoint(0, 0)}}, 0), ConfigError);
  const GroundTruth far{{"a", GeoPoint(-80, -179)}, {"b", GeoPoint(80, 179)}};
  EXPECT_THROW(heatmap_grid(report_with_correct({"a", "b"}), far, 1), ConfigError);

  fixtures::TempDir dir("eval");
  const auto g = heatmap_grid(report_with_correct({"a"}, {"b"}), {{"a", GeoPoint(1, 1)}, {"b", GeoPoint(1.01, 1.01)}}, 500);
  write_heatmap_csv(g, dir / "grid.csv");
  std::ifstream in(dir / "grid.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "cell_lat,cell_lon,count");
  std::size_t lines = 0, sum = 0;
  while (std::getline(in, line)) {
    ++lines;
    sum += std::stoul(line.substr(line.rfind(',') + 1));
  }
  EXPECT_EQ(lines, g.rows * g.cols);
  EXPECT_EQ(sum, 1u);
}

TEST(ReportCsv, RoundTripAcrossRadii) {
  Rng rng(6);
  GroundTruth truth;
  std::vector<GlePrediction> preds;
  for (int i = 0; i < 30; ++i) {
    const std::string id = "t" + std::to_string(i);
    truth[id] = GeoPoint(rng.uniform(-10, 10), rng.uniform(-10, 10));
    preds.push_back(i % 7 == 0 ? predict(id, std::nullopt) : predict(id, north_of(truth[id], rng.uniform(0, 2000))));
  }
  const std::vector<EvalReport> reports{percent_correct(preds, truth, 100), percent_correct(preds, truth, 1000)};
  fixtures::TempDir dir("eval");
  write_report_csv(reports, dir / "r.csv");
  const auto back = read_report_csv(dir / "r.csv");
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(back[k].radius_m, reports[k].radius_m);
    EXPECT_EQ(back[k].total, reports[k].total);
    EXPECT_EQ(back[k].correct, reports[k].correct);
    for (std::size_t i = 0; i < reports[k].verdicts.size(); ++i) {
      EXPECT_EQ(back[k].verdicts[i].target_id, reports[k].verdicts[i].target_id);
      EXPECT_EQ(back[k].verdicts[i].verdict, reports[k].verdicts[i].verdict);
      EXPECT_EQ(back[k].verdicts[i].distance_m.has_value(), reports[k].verdicts[i].distance_m.has_value());
      if (reports[k].verdicts[i].distance_m) {
        EXPECT_NEAR(*back[k].verdicts[i].distance_m, *reports[k].verdicts[i].distance_m, 5e-4);
      }
    }
  }
  std::ofstream(dir / "bad.csv") << "target_id,verdict,distance_m,radius_m\nx,maybe,,100\n";
  EXPECT_THROW(read_report_csv(dir / "bad.csv"), DataError);
}

namespace {

struct SceneCorpus {
  std::vector<ExperimentImage> background;
  std::shared_ptr<const VisualVocabulary> vocab;
};

// 30 scenes at distinct places; the vocabulary is trained on their features.
const SceneCorpus& scene_corpus() {
  static const SceneCorpus c = [] {
    SceneCorpus c;
    std::vector<ImageRecord> recs;
    for (int i = 0; i < 30; ++i) {
      const std::uint64_t seed = 700 + i;
      const GeoPoint at(30 + i * 0.1, 10 - i * 0.1);
      c.background.push_back({"bg" + std::to_string(i), at, [seed] { return fixtures::random_scene(seed, 160, 120); }});
      recs.push_back({c.background.back().id, extract_features(fixtures::random_scene(seed, 160, 120)), at, {}});
    }
    c.vocab = std::make_shared<const VisualVocabulary>(fixtures::corpus_vocabulary(recs, 48, 3));
    return c;
  }();
  return c;
}

std::vector<ExperimentImage> duplicate_targets(const std::vector<std::size_t>& which) {
  std::vector<ExperimentImage> t;
  for (std::size_t i : which) {
    ExperimentImage img = scene_corpus().background[i];
    img.id = "target" + std::to_string(i);
    t.push_back(img);
  }
  return t;
}

}  // namespace

TEST(FilteredBackground, IdentityFilterGivesIdenticalReports) {
  FilteredBackgroundConfig cfg;
  cfg.vocab = scene_corpus().vocab;
  cfg.neighbors = 10;
  const auto targets = duplicate_targets({0, 7, 19});
  const auto r = filtered_background_experiment(scene_corpus().background, targets, cfg);
  ASSERT_EQ(r.original_background.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(r.original_background[k].correct, r.filtered_background[k].correct);
    EXPECT_EQ(r.original_background[k].correct_ids(), r.filtered_background[k].correct_ids());
  }
  for (std::size_t i = 0; i < targets.size(); ++i)
    EXPECT_EQ(r.original_predictions[i].propagator_id, r.filtered_predictions[i].propagator_id);
}

TEST(FilteredBackground, DuplicatePropagatorSurvivesSharedFilter) {
  FilteredBackgroundConfig cfg;
  cfg.vocab = scene_corpus().vocab;
  cfg.enhancement = [](const RasterImage& img) { return apply_filter(img, FilterName::Toaster); };
  const auto targets = duplicate_targets({2, 11, 25});
  const auto r = filtered_background_experiment(scene_corpus().background, targets, cfg);
  EXPECT_EQ(r.collection_size, 30u);
  ASSERT_EQ(r.patched_collection_sizes.size(), targets.size());
  for (auto n : r.patched_collection_sizes) EXPECT_EQ(n, 30u);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const std::string want = "bg" + targets[i].id.substr(6);
    EXPECT_EQ(r.filtered_predictions[i].propagator_id, want);
  }
  EXPECT_EQ(r.filtered_background[0].correct, targets.size());
  EXPECT_EQ(r.filtered_background[0].percent_text(), "100.00");
}

TEST(FilteredBackground, MissingPixelsIsDataError) {
  FilteredBackgroundConfig cfg;
  cfg.vocab = scene_corpus().vocab;
  auto bg = scene_corpus().background;
  bg[4].pixels = nullptr;
  EXPECT_THROW(filtered_background_experiment(bg, duplicate_targets({1}), cfg), DataError);
  cfg.vocab.reset();
  EXPECT_THROW(filtered_background_experiment(scene_corpus().background, duplicate_targets({1}), cfg), ConfigError);
}
