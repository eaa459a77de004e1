#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "geocloak/features.hpp"
#include "geocloak/index.hpp"

namespace geocloak {

// Pairwise geometric matching tolerances.
struct PgmParams {
  double rotation_bin = 3.14159265358979323846 / 8.0;
  double log_scale_bin = 0.2;
  double rotation_tolerance = 3.14159265358979323846 / 8.0;
  double log_scale_tolerance = 0.2;
  double pair_angle_tolerance = 3.14159265358979323846 / 8.0;
  double pair_log_length_tolerance = 0.25;
  double min_pair_length = 2.0;
  std::size_t min_consistent_partners = 2;
};

struct Correspondence {
  Keypoint query;
  Keypoint db;
  std::uint32_t query_idx = 0;
  std::uint32_t db_feature = 0;
  std::uint8_t hamming = 0;
};

struct PgmScore {
  std::size_t inliers = 0;
  std::size_t consistent_pairs = 0;
  double rotation = 0.0;   // radians in [0, 2pi)
  double log_scale = 0.0;  // ln(scale_db / scale_q)
  std::vector<bool> inlier_mask;  // parallel to the scored correspondences
};

// One-to-one selection: ascending Hamming distance, ties by
// (query_idx, db_feature); a query or database keypoint is used at most once.
std::vector<Correspondence> tentative_correspondences(std::span<const Match> matches,
                                                      std::span<const Keypoint> query_keypoints,
                                                      std::span<const Keypoint> db_keypoints);

// Stage 1 votes (orientation difference, log scale ratio) into a 2-D
// histogram and keeps correspondences close to the peak bin's mean. Stage 2
// counts pairs whose connecting vectors agree with that rotation and scale.
// Inliers are consistent with at least two others; the score is the number
// of consistent pairs.
PgmScore pgm_score(std::span<const Correspondence> corrs, const PgmParams& params = {});

// Geometric re-ranking of an index shortlist: by consistent pairs, then the
// original score, then id. Candidates without consistent pairs follow in
// their original order.
std::vector<RankedMatch> rerank(std::vector<RankedMatch> candidates, const FeatureSet& query,
                                const BowIndex& index, const PgmParams& params = {});

}  // namespace geocloak
