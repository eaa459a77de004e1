#include "geocloak/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "geocloak/enhance.hpp"
#include "geocloak/error.hpp"
#include "geocloak/evaluation.hpp"
#include "geocloak/features.hpp"
#include "geocloak/gle.hpp"
#include "geocloak/image.hpp"
#include "geocloak/index.hpp"
#include "geocloak/manifest.hpp"
#include "geocloak/toponym.hpp"
#include "geocloak/vocab.hpp"

namespace geocloak {
namespace {

namespace fs = std::filesystem;

struct Globals {
  std::uint64_t seed = 42;
  unsigned threads = 1;
};

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto log = std::make_shared<spdlog::logger>("geocloak", sink);
  log->set_pattern("[%l] %v");
  log->set_level(spdlog::level::warn);
  if (const char* env = std::getenv("GEOCLOAK_LOG")) {
    const std::string v = env;
    if (v == "error") log->set_level(spdlog::level::err);
    else if (v == "warn") log->set_level(spdlog::level::warn);
    else if (v == "info") log->set_level(spdlog::level::info);
    else if (v == "debug") log->set_level(spdlog::level::debug);
    else throw ConfigError("GEOCLOAK_LOG must be one of error, warn, info, debug");
  }
  return log;
}

// Calls f(i) for every i < n on up to `threads` workers. Exceptions other
// than those f handles itself are rethrown after all workers stop.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        f(i);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = n;
        return;
      }
    }
  };
  const unsigned count = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < count; ++t) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);
}

struct LoadedImages {
  std::vector<FeatureSet> features;
  std::vector<std::size_t> rows;  // manifest row of each feature set
  std::size_t skipped = 0;
};

// Unreadable or undersized images are skipped with a warning.
LoadedImages load_manifest_features(const std::vector<ManifestRow>& rows, unsigned threads,
                                    spdlog::logger& log) {
  std::vector<std::optional<FeatureSet>> slots(rows.size());
  std::vector<std::string> problems(rows.size());
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    try {
      slots[i] = load_feature_set(rows[i].path, rows[i].id);
    } catch (const DataError& e) {
      problems[i] = e.what();
    }
  });
  LoadedImages out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!slots[i]) {
      log.warn("skipping {}: {}", rows[i].id, problems[i]);
      ++out.skipped;
      continue;
    }
    out.features.push_back(std::move(*slots[i]));
    out.rows.push_back(i);
  }
  return out;
}

std::vector<double> parse_radii(const std::string& text) {
  std::vector<double> radii;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const double r = parse_double(part, "radius");
    if (!(r >= 0.0)) throw ConfigError("radii must be non-negative");
    radii.push_back(r);
  }
  if (radii.empty()) throw ConfigError("--radii needs at least one value");
  return radii;
}

System system_flag(const std::string& name) {
  const auto s = parse_system(name);
  if (!s) throw ConfigError("unknown system '" + name + "' (expected pgm or bnn)");
  return *s;
}

EnhancementRecipe recipe_flags(const std::string& filter, std::optional<double> crop, bool tilt) {
  EnhancementRecipe r;
  if (!filter.empty() && filter != "identity" && filter != "none") {
    r.filter = parse_filter(filter);
    if (!r.filter) throw ConfigError("unknown filter '" + filter + "'");
  }
  if (crop) {
    if (!(*crop >= 0.0 && *crop < 1.0)) throw ConfigError("--crop must be in [0, 1)");
    r.crop_fraction = crop;
  }
  r.tilt_shift = tilt;
  return r;
}

std::string fmt_score(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<BatchTarget> batch_targets(const std::vector<ManifestRow>& rows) {
  std::vector<BatchTarget> targets;
  for (const auto& row : rows)
    targets.push_back({row.id, [path = row.path, id = row.id] { return load_feature_set(path, id); }});
  return targets;
}

GroundTruth truth_of(const std::vector<ManifestRow>& rows) {
  GroundTruth t;
  for (const auto& r : rows)
    if (!t.emplace(r.id, r.location).second) throw DataError("duplicate target id '" + r.id + "'");
  return t;
}

void write_predictions(const BatchResult& res, const fs::path& path, bool timing) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "target_id,pred_lat,pred_lon,propagator_id,system,ms\n";
  for (std::size_t i = 0; i < res.predictions.size(); ++i) {
    const GlePrediction& p = res.predictions[i];
    out << p.target_id << ',';
    if (p.predicted)
      out << format_degrees(p.predicted->lat()) << ',' << format_degrees(p.predicted->lon()) << ','
          << *p.propagator_id;
    else
      out << ",,";
    char ms[32];
    std::snprintf(ms, sizeof ms, "%.3f", timing ? res.millis[i] : 0.0);
    out << ',' << to_string(p.system) << ',' << ms << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::string fmt_radius(double m) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%g", m);
  return buf;
}

void print_report_line(std::ostream& out, const std::string& label, const EvalReport& r) {
  // An empty subset (e.g. no toponym-tagged targets) has no percentage.
  out << label << ',' << fmt_radius(r.radius_m) << ',' << r.correct << ',' << r.total << ','
      << (r.total == 0 ? "NA" : r.percent_text()) << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"geocloak: visual geo-location and geo-cloaking evaluation", "geocloak"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads")->capture_default_str()->check(CLI::Range(1u, 1024u));

  // build-vocab
  auto* bv = app.add_subcommand("build-vocab", "Train a visual vocabulary from a manifest");
  std::string bv_images, bv_out;
  std::size_t bv_k = 1000, bv_max = 0;
  bv->add_option("--images", bv_images, "Manifest CSV")->required();
  bv->add_option("--out", bv_out, "Vocabulary file")->required();
  bv->add_option("--k", bv_k, "Vocabulary size")->capture_default_str()->check(CLI::PositiveNumber);
  bv->add_option("--max-descriptors", bv_max, "Descriptor sample cap, 0 for all")->capture_default_str();

  // index build
  auto* ix = app.add_subcommand("index", "Index operations");
  ix->require_subcommand(1);
  auto* ib = ix->add_subcommand("build", "Build a searchable index from a manifest");
  std::string ib_images, ib_vocab, ib_out, ib_bnn_vocab;
  bool ib_no_bnn = false;
  ib->add_option("--images", ib_images, "Manifest CSV")->required();
  ib->add_option("--vocab", ib_vocab, "Vocabulary file")->required();
  ib->add_option("--out", ib_out, "Index file")->required();
  ib->add_option("--bnn-vocab", ib_bnn_vocab, "Vocabulary for the baseline histograms (default: --vocab)");
  ib->add_flag("--no-bnn", ib_no_bnn, "Skip the baseline section");

  // locate
  auto* lo = app.add_subcommand("locate", "Geo-locate one image");
  std::string lo_index, lo_image, lo_system = "pgm";
  std::size_t lo_top_k = 100, lo_checks = kDefaultMaxChecks;
  lo->add_option("--index", lo_index, "Index file")->required();
  lo->add_option("--image", lo_image, "Image (PPM) or feature dump (.gcft)")->required();
  lo->add_option("--system", lo_system, "pgm or bnn")->capture_default_str();
  lo->add_option("--top-k", lo_top_k, "Shortlist length for re-ranking")->capture_default_str()->check(CLI::PositiveNumber);
  lo->add_option("--max-checks", lo_checks, "Baseline search budget")->capture_default_str()->check(CLI::PositiveNumber);

  // locate-batch
  auto* lb = app.add_subcommand("locate-batch", "Geo-locate every image of a manifest");
  std::string lb_index, lb_targets, lb_out, lb_system = "pgm";
  std::size_t lb_top_k = 100, lb_checks = kDefaultMaxChecks;
  bool lb_timing = false;
  lb->add_option("--index", lb_index, "Index file")->required();
  lb->add_option("--targets", lb_targets, "Target manifest CSV")->required();
  lb->add_option("--out", lb_out, "Predictions CSV")->required();
  lb->add_option("--system", lb_system, "pgm or bnn")->capture_default_str();
  lb->add_option("--top-k", lb_top_k, "Shortlist length for re-ranking")->capture_default_str()->check(CLI::PositiveNumber);
  lb->add_option("--max-checks", lb_checks, "Baseline search budget")->capture_default_str()->check(CLI::PositiveNumber);
  lb->add_flag("--timing", lb_timing, "Fill the ms column with wall time (otherwise 0)");

  // enhance
  auto* en = app.add_subcommand("enhance", "Apply filter, crop and tilt-shift (in that order)");
  std::string en_in, en_out, en_filter;
  std::optional<double> en_crop;
  bool en_tilt = false;
  en->add_option("--in", en_in, "Input PPM")->required();
  en->add_option("--out", en_out, "Output PPM")->required();
  en->add_option("--filter", en_filter, "Gotham, Kelvin, Lomo, Nashville or Toaster");
  en->add_option("--crop", en_crop, "Fraction of the area to remove, in [0, 1)");
  en->add_flag("--tiltshift", en_tilt, "Tilt-shift around the salient row");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Percent correctly located within radii");
  std::string ev_index, ev_targets, ev_out, ev_split, ev_system = "pgm", ev_preds, ev_radii = "100,1000";
  std::size_t ev_top_k = 100, ev_checks = kDefaultMaxChecks;
  ev->add_option("--index", ev_index, "Index file");
  ev->add_option("--predictions", ev_preds, "Existing predictions CSV instead of running the index");
  ev->add_option("--targets", ev_targets, "Target manifest CSV with ground truth")->required();
  ev->add_option("--radii", ev_radii, "Comma-separated radii in meters")->capture_default_str();
  ev->add_option("--split-toponym", ev_split, "Tag table from the toponym command");
  ev->add_option("--out", ev_out, "Report CSV")->required();
  ev->add_option("--system", ev_system, "pgm or bnn")->capture_default_str();
  ev->add_option("--top-k", ev_top_k, "Shortlist length for re-ranking")->capture_default_str()->check(CLI::PositiveNumber);
  ev->add_option("--max-checks", ev_checks, "Baseline search budget")->capture_default_str()->check(CLI::PositiveNumber);

  // cloak-report
  auto* cr = app.add_subcommand("cloak-report", "Net and gross cloaking between two reports");
  std::string cr_before, cr_after, cr_out;
  cr->add_option("--before", cr_before, "Report on original targets")->required();
  cr->add_option("--after", cr_after, "Report on enhanced targets")->required();
  cr->add_option("--out", cr_out, "Also write the table to this CSV");

  // heatmap
  auto* hm = app.add_subcommand("heatmap", "Grid of correctly located targets");
  std::string hm_report, hm_targets, hm_out;
  double hm_cell = 500.0;
  std::optional<double> hm_radius;
  hm->add_option("--report", hm_report, "Report CSV")->required();
  hm->add_option("--targets", hm_targets, "Target manifest CSV")->required();
  hm->add_option("--cell-meters", hm_cell, "Cell size in meters")->capture_default_str()->check(CLI::PositiveNumber);
  hm->add_option("--radius", hm_radius, "Which radius of the report (default: smallest)");
  hm->add_option("--out", hm_out, "Grid CSV")->required();

  // toponym
  auto* tp = app.add_subcommand("toponym", "Classify tags as toponyms from a background manifest");
  std::string tp_manifest, tp_out;
  ToponymParams tp_params;
  tp->add_option("--manifest", tp_manifest, "Background manifest CSV")->required();
  tp->add_option("--out", tp_out, "Tag table CSV")->required();
  tp->add_option("--cell-degrees", tp_params.cell_size, "Grid cell size")->capture_default_str()->check(CLI::PositiveNumber);
  tp->add_option("--min-count", tp_params.min_count, "Minimum occurrences")->capture_default_str();
  tp->add_option("--threshold", tp_params.concentration_threshold, "Concentration threshold")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));

  // experiment filtered-background
  auto* ex = app.add_subcommand("experiment", "Experiments");
  ex->require_subcommand(1);
  auto* fb = ex->add_subcommand("filtered-background", "Enhance the target and its top neighbours alike");
  std::string fb_background, fb_targets, fb_vocab, fb_filter, fb_out_orig, fb_out_filt, fb_radii = "100,1000";
  std::optional<double> fb_crop;
  bool fb_tilt = false;
  std::size_t fb_neighbors = 100, fb_checks = kDefaultMaxChecks;
  fb->add_option("--background", fb_background, "Background manifest CSV (images)")->required();
  fb->add_option("--targets", fb_targets, "Target manifest CSV (images)")->required();
  fb->add_option("--vocab", fb_vocab, "Vocabulary file")->required();
  fb->add_option("--filter", fb_filter, "Filter name, or identity");
  fb->add_option("--crop", fb_crop, "Fraction of the area to remove, in [0, 1)");
  fb->add_flag("--tiltshift", fb_tilt, "Tilt-shift around the salient row");
  fb->add_option("--neighbors", fb_neighbors, "Neighbours replaced per target")->capture_default_str()->check(CLI::PositiveNumber);
  fb->add_option("--max-checks", fb_checks, "Baseline search budget")->capture_default_str()->check(CLI::PositiveNumber);
  fb->add_option("--radii", fb_radii, "Comma-separated radii in meters")->capture_default_str();
  fb->add_option("--out-original", fb_out_orig, "Report against the original background")->required();
  fb->add_option("--out-filtered", fb_out_filt, "Report against the patched background")->required();

  // Global options may follow the subcommand.
  for (auto* sub : {bv, ix, ib, lo, lb, en, ev, cr, hm, tp, ex, fb}) sub->fallthrough();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    auto log = make_logger(err);

    if (*bv) {
      const auto rows = read_manifest(bv_images);
      auto loaded = load_manifest_features(rows, g.threads, *log);
      log->info("vocabulary: {} images loaded, {} skipped", loaded.features.size(), loaded.skipped);
      VocabularyTrainingOptions opts;
      opts.k = bv_k;
      opts.seed = g.seed;
      opts.max_descriptors = bv_max;
      save_vocabulary(train_vocabulary(loaded.features, opts), bv_out);
      out << "vocabulary k=" << bv_k << " images=" << loaded.features.size() << " skipped=" << loaded.skipped
          << '\n';
    } else if (*ib) {
      const auto rows = read_manifest(ib_images);
      auto vocab = std::make_shared<const VisualVocabulary>(load_vocabulary(ib_vocab));
      auto loaded = load_manifest_features(rows, g.threads, *log);
      BowIndexBuilder builder(vocab);
      for (std::size_t i = 0; i < loaded.features.size(); ++i) {
        const ManifestRow& row = rows[loaded.rows[i]];
        builder.add(row.id, loaded.features[i], row.location, row.tags);
      }
      GeoIndexBundle bundle;
      bundle.bow = std::make_shared<const BowIndex>(std::move(builder).finish());
      if (!ib_no_bnn) {
        auto bnn_vocab = ib_bnn_vocab.empty() ? vocab
                                              : std::make_shared<const VisualVocabulary>(load_vocabulary(ib_bnn_vocab));
        KdForestParams fp;
        fp.seed = g.seed;
        auto bnn = std::make_shared<BnnIndex>(bnn_vocab, fp);
        for (std::size_t i = 0; i < loaded.features.size(); ++i)
          bnn->add(rows[loaded.rows[i]].id, loaded.features[i], rows[loaded.rows[i]].location);
        bnn->build();
        bundle.bnn = std::move(bnn);
      }
      save_bundle(bundle, ib_out);
      out << "index images=" << bundle.bow->image_count() << " postings=" << bundle.bow->posting_count()
          << " skipped=" << loaded.skipped << '\n';
    } else if (*lo) {
      const System sys = system_flag(lo_system);
      GleOptions opts;
      opts.top_k = lo_top_k;
      opts.max_checks = lo_checks;
      const GeoLocator locator(load_bundle(lo_index), opts);
      const FeatureSet target = load_feature_set(lo_image, fs::path(lo_image).stem().string());
      const GlePrediction p = locator.geolocate(target, sys);
      if (p.abstained())
        out << "ABSTAIN\n";
      else
        out << format_degrees(p.predicted->lat()) << ' ' << format_degrees(p.predicted->lon()) << ' '
            << *p.propagator_id << ' ' << fmt_score(p.score) << '\n';
    } else if (*lb) {
      const System sys = system_flag(lb_system);
      GleOptions opts;
      opts.top_k = lb_top_k;
      opts.max_checks = lb_checks;
      const GeoLocator locator(load_bundle(lb_index), opts);
      const auto rows = read_manifest(lb_targets);
      const auto targets = batch_targets(rows);
      const BatchResult res = geolocate_batch(locator, targets, sys, g.threads);
      for (const auto& p : res.predictions)
        if (!p.error.empty()) log->warn("target {}: {}", p.target_id, p.error);
      write_predictions(res, lb_out, lb_timing);
      std::size_t located = 0;
      for (const auto& p : res.predictions) located += p.abstained() ? 0 : 1;
      out << "targets=" << res.predictions.size() << " located=" << located << " failed=" << res.failed << '\n';
    } else if (*en) {
      const EnhancementRecipe recipe = recipe_flags(en_filter, en_crop, en_tilt);
      if (recipe.is_identity()) throw ConfigError("enhance needs --filter, --crop or --tiltshift");
      write_image(recipe.apply(read_image(en_in)), en_out);
    } else if (*ev) {
      if (ev_index.empty() == ev_preds.empty()) throw ConfigError("evaluate needs exactly one of --index, --predictions");
      const auto radii = parse_radii(ev_radii);
      const auto rows = read_manifest(ev_targets);
      const GroundTruth truth = truth_of(rows);
      std::vector<GlePrediction> preds;
      if (!ev_index.empty()) {
        GleOptions opts;
        opts.top_k = ev_top_k;
        opts.max_checks = ev_checks;
        const GeoLocator locator(load_bundle(ev_index), opts);
        const auto targets = batch_targets(rows);
        BatchResult res = geolocate_batch(locator, targets, system_flag(ev_system), g.threads);
        for (const auto& p : res.predictions)
          if (!p.error.empty()) log->warn("target {}: {}", p.target_id, p.error);
        preds = std::move(res.predictions);
      } else {
        for (const auto& row : read_csv(ev_preds, {"target_id", "pred_lat", "pred_lon", "propagator_id", "system", "ms"})) {
          GlePrediction p;
          p.target_id = row.at(0);
          if (!row.at(1).empty()) {
            p.predicted = GeoPoint(parse_double(row[1], "pred_lat"), parse_double(row.at(2), "pred_lon"));
            p.propagator_id = row.at(3);
          }
          preds.push_back(std::move(p));
        }
      }
      std::vector<EvalReport> reports;
      for (double r : radii) reports.push_back(percent_correct(preds, truth, r));
      write_report_csv(reports, ev_out);
      std::optional<TargetSplit> split;
      if (!ev_split.empty()) split = split_targets(rows, read_tag_table(ev_split));
      out << "subset,radius_m,correct,total,percent\n";
      for (const auto& r : reports) {
        print_report_line(out, "all", r);
        if (split) {
          const SplitReport s = split_report(r, *split);
          print_report_line(out, "toponym_tagged", s.tagged);
          print_report_line(out, "tagless", s.tagless);
        }
      }
    } else if (*cr) {
      const auto before = read_report_csv(cr_before);
      const auto after = read_report_csv(cr_after);
      std::ostringstream table;
      table << "radius_m,before_correct,after_correct,net_cloaked_percent,gross_cloaked_percent\n";
      for (const auto& b : before) {
        const auto a = std::find_if(after.begin(), after.end(), [&](const EvalReport& r) { return r.radius_m == b.radius_m; });
        if (a == after.end()) throw DataError("no matching radius in " + cr_after);
        if (a->total != b.total) throw DataError("reports cover different target sets");
        const CloakReport c = cloak_metrics(b, *a);
        table << fmt_radius(b.radius_m) << ',' << c.before.size() << ','
              << c.after.size() << ',' << c.net_text() << ',' << c.gross_text() << '\n';
      }
      out << table.str();
      if (!cr_out.empty()) {
        std::ofstream f(cr_out, std::ios::binary);
        if (!f) throw IoError("cannot write " + cr_out);
        f << table.str();
      }
    } else if (*hm) {
      const auto reports = read_report_csv(hm_report);
      if (reports.empty()) throw DataError("report " + hm_report + " has no rows");
      const EvalReport* chosen = nullptr;
      for (const auto& r : reports) {
        if (hm_radius ? r.radius_m == *hm_radius : (!chosen || r.radius_m < chosen->radius_m)) chosen = &r;
      }
      if (!chosen) throw ConfigError("report has no rows for the requested radius");
      const auto grid = heatmap_grid(*chosen, truth_of(read_manifest(hm_targets)), hm_cell);
      write_heatmap_csv(grid, hm_out);
      out << "cells=" << grid.rows * grid.cols << " correct=" << grid.total() << '\n';
    } else if (*tp) {
      const auto rows = read_manifest(tp_manifest);
      const auto stats = collect_tag_stats(rows, tp_params.cell_size);
      const auto classes = classify_tags(stats, tp_params);
      write_tag_table(stats, classes, tp_out);
      std::size_t toponyms = 0;
      for (const auto& [tag, c] : classes) toponyms += c == TagClass::Toponym ? 1 : 0;
      out << "tags=" << classes.size() << " toponyms=" << toponyms << '\n';
    } else if (*fb) {
      const EnhancementRecipe recipe = recipe_flags(fb_filter, fb_crop, fb_tilt);
      auto to_images = [](const std::vector<ManifestRow>& rows) {
        std::vector<ExperimentImage> imgs;
        for (const auto& r : rows) imgs.push_back({r.id, r.location, [p = r.path] { return read_image(p); }});
        return imgs;
      };
      const auto background = to_images(read_manifest(fb_background));
      const auto targets = to_images(read_manifest(fb_targets));
      FilteredBackgroundConfig cfg;
      cfg.vocab = std::make_shared<const VisualVocabulary>(load_vocabulary(fb_vocab));
      if (!recipe.is_identity()) cfg.enhancement = [recipe](const RasterImage& img) { return recipe.apply(img); };
      cfg.radii = parse_radii(fb_radii);
      cfg.neighbors = fb_neighbors;
      cfg.max_checks = fb_checks;
      cfg.forest.seed = g.seed;
      const auto res = filtered_background_experiment(background, targets, cfg);
      write_report_csv(res.original_background, fb_out_orig);
      write_report_csv(res.filtered_background, fb_out_filt);
      out << "enhancement=" << recipe.describe() << " collection=" << res.collection_size << '\n';
      out << "background,radius_m,correct,total,percent\n";
      for (std::size_t i = 0; i < res.original_background.size(); ++i) {
        print_report_line(out, "original", res.original_background[i]);
        print_report_line(out, "filtered", res.filtered_background[i]);
      }
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace geocloak
