#include "geocloak/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <utility>

namespace geocloak {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_2pi(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a -= kTwoPi;
  return a;
}

// Absolute circular difference in [0, pi].
double circular_gap(double a, double b) {
  const double d = wrap_2pi(a - b);
  return std::min(d, kTwoPi - d);
}

}  // namespace

std::vector<Correspondence> tentative_correspondences(std::span<const Match> matches,
                                                      std::span<const Keypoint> query_keypoints,
                                                      std::span<const Keypoint> db_keypoints) {
  std::vector<std::size_t> order(matches.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Match& x = matches[a];
    const Match& y = matches[b];
    if (x.hamming != y.hamming) return x.hamming < y.hamming;
    if (x.query_idx != y.query_idx) return x.query_idx < y.query_idx;
    return x.db_feature < y.db_feature;
  });
  std::vector<bool> query_used(query_keypoints.size(), false);
  std::vector<bool> db_used(db_keypoints.size(), false);
  std::vector<Correspondence> out;
  for (std::size_t i : order) {
    const Match& m = matches[i];
    if (query_used[m.query_idx] || db_used[m.db_feature]) continue;
    query_used[m.query_idx] = true;
    db_used[m.db_feature] = true;
    out.push_back({query_keypoints[m.query_idx], db_keypoints[m.db_feature], m.query_idx,
                   m.db_feature, m.hamming});
  }
  return out;
}

PgmScore pgm_score(std::span<const Correspondence> corrs, const PgmParams& params) {
  PgmScore score;
  score.inlier_mask.assign(corrs.size(), false);
  if (corrs.size() < 2) return score;

  // Stage 1: rotation / log-scale voting.
  const int rotation_bins = static_cast<int>(std::lround(kTwoPi / params.rotation_bin));
  std::vector<double> dtheta(corrs.size());
  std::vector<double> dsigma(corrs.size());
  std::map<std::pair<int, long>, std::vector<std::size_t>> bins;
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    dtheta[i] = wrap_2pi(corrs[i].db.orientation - corrs[i].query.orientation);
    dsigma[i] = std::log(corrs[i].db.scale / corrs[i].query.scale);
    const int tb = std::min(rotation_bins - 1, static_cast<int>(dtheta[i] / params.rotation_bin));
    const long sb = static_cast<long>(std::floor(dsigma[i] / params.log_scale_bin));
    bins[{tb, sb}].push_back(i);
  }
  // Largest bin; std::map order breaks ties towards the lowest bin.
  const std::vector<std::size_t>* peak = nullptr;
  for (const auto& [key, members] : bins)
    if (peak == nullptr || members.size() > peak->size()) peak = &members;
  double theta_sum = 0.0;
  double sigma_sum = 0.0;
  for (std::size_t i : *peak) {
    theta_sum += dtheta[i];
    sigma_sum += dsigma[i];
  }
  score.rotation = wrap_2pi(theta_sum / static_cast<double>(peak->size()));
  score.log_scale = sigma_sum / static_cast<double>(peak->size());

  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    if (circular_gap(dtheta[i], score.rotation) > params.rotation_tolerance) continue;
    if (std::abs(dsigma[i] - score.log_scale) > params.log_scale_tolerance) continue;
    kept.push_back(i);
  }

  // Stage 2: pairwise vector consistency.
  std::vector<std::size_t> partners(corrs.size(), 0);
  for (std::size_t a = 0; a < kept.size(); ++a) {
    const Correspondence& ci = corrs[kept[a]];
    for (std::size_t b = a + 1; b < kept.size(); ++b) {
      const Correspondence& cj = corrs[kept[b]];
      const double qx = cj.query.x - ci.query.x;
      const double qy = cj.query.y - ci.query.y;
      const double dx = cj.db.x - ci.db.x;
      const double dy = cj.db.y - ci.db.y;
      const double q_len = std::hypot(qx, qy);
      const double d_len = std::hypot(dx, dy);
      if (q_len < params.min_pair_length || d_len <= 0.0) continue;
      const double angle = std::atan2(dy, dx) - std::atan2(qy, qx);
      if (circular_gap(angle, score.rotation) > params.pair_angle_tolerance) continue;
      if (std::abs(std::log(d_len / q_len) - score.log_scale) > params.pair_log_length_tolerance) continue;
      ++score.consistent_pairs;
      ++partners[kept[a]];
      ++partners[kept[b]];
    }
  }
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    if (partners[i] >= params.min_consistent_partners) {
      score.inlier_mask[i] = true;
      ++score.inliers;
    }
  }
  return score;
}

std::vector<RankedMatch> rerank(std::vector<RankedMatch> candidates, const FeatureSet& query,
                                const BowIndex& index, const PgmParams& params) {
  for (RankedMatch& c : candidates) {
    const auto corrs = tentative_correspondences(c.matches, query.keypoints, index.image(c.image).keypoints);
    const PgmScore s = pgm_score(corrs, params);
    c.consistent_pairs = s.consistent_pairs;
    c.inliers = s.inliers;
  }
  // Stable: zero-pair candidates keep their relative order.
  std::stable_sort(candidates.begin(), candidates.end(), [](const RankedMatch& a, const RankedMatch& b) {
    if (a.consistent_pairs == 0 || b.consistent_pairs == 0) {
      return a.consistent_pairs > 0 && b.consistent_pairs == 0;
    }
    if (a.consistent_pairs != b.consistent_pairs) return a.consistent_pairs > b.consistent_pairs;
    if (a.score != b.score) return a.score > b.score;
    return a.image_id < b.image_id;
  });
  return candidates;
}

}  // namespace geocloak
