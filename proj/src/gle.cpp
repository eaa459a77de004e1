#include "geocloak/gle.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <thread>

#include "geocloak/binary_io.hpp"
#include "geocloak/error.hpp"

namespace geocloak {

std::string_view to_string(System s) { return s == System::Bnn ? "bnn" : "pgm"; }

std::optional<System> parse_system(std::string_view name) {
  if (name == "bnn" || name == "BNN") return System::Bnn;
  if (name == "pgm" || name == "PGM") return System::Pgm;
  return std::nullopt;
}

namespace {
constexpr std::string_view kIndexMagic = "GCIX1";
}

void save_bundle(const GeoIndexBundle& bundle, const std::filesystem::path& path) {
  if (!bundle.bow) throw ConfigError("index bundle without an inverted index");
  BinaryWriter w;
  w.magic(kIndexMagic);
  bundle.bow->write(w);
  w.pod(static_cast<std::uint8_t>(bundle.bnn ? 1 : 0));
  if (bundle.bnn) bundle.bnn->write(w);
  w.save(path);
}

GeoIndexBundle load_bundle(const std::filesystem::path& path) {
  BinaryReader r = BinaryReader::load(path);
  r.expect_magic(kIndexMagic);
  GeoIndexBundle bundle;
  bundle.bow = std::make_shared<const BowIndex>(BowIndex::read(r));
  if (r.pod<std::uint8_t>() != 0) bundle.bnn = BnnIndex::read(r);
  if (!r.at_end()) throw MalformedHeaderError("trailing bytes in index file " + path.string());
  return bundle;
}

GeoLocator::GeoLocator(GeoIndexBundle bundle, GleOptions options)
    : bundle_(std::move(bundle)), options_(options) {}

GlePrediction GeoLocator::geolocate(const FeatureSet& target, System system) const {
  return system == System::Pgm ? locate_pgm(target) : locate_bnn(target);
}

GlePrediction GeoLocator::locate_pgm(const FeatureSet& target) const {
  if (!bundle_.bow) throw ConfigError("PGM geo-location needs an inverted index");
  GlePrediction pred;
  pred.target_id = target.image_id;
  pred.system = System::Pgm;
  if (target.empty()) return pred;
  auto shortlist = bundle_.bow->query(target, options_.top_k);
  if (shortlist.empty()) return pred;
  const auto ranked = rerank(std::move(shortlist), target, *bundle_.bow, options_.pgm);
  const RankedMatch& top = ranked.front();
  if (top.inliers < options_.min_inliers) return pred;
  pred.predicted = bundle_.bow->image(top.image).location;
  pred.propagator_id = top.image_id;
  pred.score = top.score;
  pred.consistent_pairs = top.consistent_pairs;
  return pred;
}

GlePrediction GeoLocator::locate_bnn(const FeatureSet& target) const {
  if (!bundle_.bnn) throw ConfigError("index has no baseline (BNN) section");
  GlePrediction pred;
  pred.target_id = target.image_id;
  pred.system = System::Bnn;
  const BowHistogram hist = bow_histogram(target, bundle_.bnn->vocabulary());
  const auto hit = bundle_.bnn->search(hist, options_.max_checks);
  if (!hit) return pred;
  const auto row = bundle_.bnn->histogram(*hit);
  double dot = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) dot += row[i] * hist.values[i];
  pred.predicted = bundle_.bnn->entry(*hit).location;
  pred.propagator_id = bundle_.bnn->entry(*hit).id;
  pred.score = dot;
  return pred;
}

BatchResult geolocate_batch(const GeoLocator& locator, std::span<const BatchTarget> targets,
                            System system, unsigned threads) {
  BatchResult result;
  result.predictions.resize(targets.size());
  result.millis.resize(targets.size(), 0.0);
  std::vector<std::uint8_t> failed(targets.size(), 0);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= targets.size()) return;
      const auto start = std::chrono::steady_clock::now();
      GlePrediction pred;
      try {
        FeatureSet fs = targets[i].load();
        fs.image_id = targets[i].id;
        pred = locator.geolocate(fs, system);
      } catch (const DataError& e) {
        pred = GlePrediction{};
        pred.target_id = targets[i].id;
        pred.system = system;
        pred.error = e.what();
        failed[i] = 1;
      }
      result.millis[i] =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      result.predictions[i] = std::move(pred);
    }
  };

  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, targets.size()))));
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  result.failed = static_cast<std::size_t>(std::count(failed.begin(), failed.end(), 1));
  return result;
}

}  // namespace geocloak
