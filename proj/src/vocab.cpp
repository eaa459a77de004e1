#include "geocloak/vocab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "geocloak/binary_io.hpp"
#include "geocloak/error.hpp"
#include "geocloak/rng.hpp"
#include "geocloak/simd/kernels.hpp"

namespace geocloak {
namespace {

// Nearest row for each point; returns the summed squared distance.
double assign_all(std::span<const double> points, std::size_t dim, std::span<const double> centroids,
                  std::size_t k, std::vector<WordId>& assignments, std::vector<double>& dist) {
  const auto& kern = simd::active_kernels();
  const std::size_t n = points.size() / dim;
  std::vector<double> row(k);
  double inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    kern.squared_l2_batch(points.data() + i * dim, centroids.data(), k, dim, row.data());
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c)
      if (row[c] < row[best]) best = c;
    assignments[i] = static_cast<WordId>(best);
    dist[i] = row[best];
    inertia += row[best];
  }
  return inertia;
}

std::vector<double> kmeans_plus_plus(std::span<const double> points, std::size_t dim,
                                     std::size_t k, Rng& rng) {
  const auto& kern = simd::active_kernels();
  const std::size_t n = points.size() / dim;
  std::vector<double> centroids;
  centroids.reserve(k * dim);
  auto add = [&](std::size_t idx) {
    centroids.insert(centroids.end(), points.begin() + static_cast<std::ptrdiff_t>(idx * dim),
                     points.begin() + static_cast<std::ptrdiff_t>((idx + 1) * dim));
  };
  add(rng.below(n));
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (centroids.size() < k * dim) {
    const double* last = centroids.data() + centroids.size() - dim;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], kern.squared_l2(points.data() + i * dim, last, dim));
      total += d2[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
      // Rounding can leave the running sum short of the target.
      while (d2[pick] <= 0.0 && pick > 0) --pick;
    } else {
      pick = rng.below(n);
    }
    add(pick);
  }
  return centroids;
}

double median_of(std::vector<double>& values) {
  const std::size_t n = values.size();
  std::sort(values.begin(), values.end());
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

KMeansResult train_kmeans(std::span<const double> points, std::size_t dim, std::size_t k,
                          std::uint64_t seed, int max_iterations) {
  if (dim == 0 || points.size() % dim != 0) throw ConfigError("point buffer is not a multiple of dim");
  const std::size_t n = points.size() / dim;
  if (k == 0) throw ConfigError("k must be positive");
  if (n < k) {
    throw ConfigError("k-means needs at least k points (" + std::to_string(n) + " < " +
                      std::to_string(k) + ")");
  }

  Rng rng(seed);
  KMeansResult result;
  result.k = k;
  result.centroids = kmeans_plus_plus(points, dim, k, rng);
  result.assignments.assign(n, 0);
  std::vector<double> dist(n);
  result.inertia_history.push_back(
      assign_all(points, dim, result.centroids, k, result.assignments, dist));

  std::vector<double> sums(k * dim);
  std::vector<std::size_t> counts(k);
  std::vector<WordId> next(n);
  const auto& kern = simd::active_kernels();
  for (int iter = 0; iter < max_iterations; ++iter) {
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const WordId c = result.assignments[i];
      ++counts[c];
      const double* p = points.data() + i * dim;
      double* s = sums.data() + static_cast<std::size_t>(c) * dim;
      for (std::size_t j = 0; j < dim; ++j) s[j] += p[j];
    }
    std::vector<std::size_t> empty;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        empty.push_back(c);
        continue;
      }
      const double inv = 1.0 / static_cast<double>(counts[c]);
      for (std::size_t j = 0; j < dim; ++j) result.centroids[c * dim + j] = sums[c * dim + j] * inv;
    }
    if (!empty.empty()) {
      for (std::size_t i = 0; i < n; ++i) {
        dist[i] = kern.squared_l2(points.data() + i * dim,
                                  result.centroids.data() + static_cast<std::size_t>(result.assignments[i]) * dim, dim);
      }
      for (std::size_t c : empty) {
        const auto far = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
        std::copy_n(points.data() + far * dim, dim, result.centroids.data() + c * dim);
        dist[far] = -1.0;
      }
    }

    const double inertia = assign_all(points, dim, result.centroids, k, next, dist);
    result.inertia_history.push_back(inertia);
    result.iterations = iter + 1;
    const bool changed = next != result.assignments;
    result.assignments.swap(next);
    if (!changed) break;
  }
  return result;
}

std::vector<double> projection_matrix(std::uint64_t seed) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<double> m(kSignatureBits * kDescriptorDim);
  for (std::size_t r = 0; r < kSignatureBits; ++r) {
    double* row = m.data() + r * kDescriptorDim;
    for (;;) {
      for (std::size_t j = 0; j < kDescriptorDim; ++j) row[j] = rng.normal();
      // Modified Gram-Schmidt against the accepted rows, twice for stability.
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t q = 0; q < r; ++q) {
          const double* prev = m.data() + q * kDescriptorDim;
          double d = 0.0;
          for (std::size_t j = 0; j < kDescriptorDim; ++j) d += row[j] * prev[j];
          for (std::size_t j = 0; j < kDescriptorDim; ++j) row[j] -= d * prev[j];
        }
      }
      double norm = 0.0;
      for (std::size_t j = 0; j < kDescriptorDim; ++j) norm += row[j] * row[j];
      norm = std::sqrt(norm);
      if (norm > 1e-6) {
        for (std::size_t j = 0; j < kDescriptorDim; ++j) row[j] /= norm;
        break;
      }
    }
  }
  return m;
}

VisualVocabulary::VisualVocabulary(std::vector<double> centroids, std::uint64_t projection_seed)
    : k_(centroids.size() / kDescriptorDim),
      projection_seed_(projection_seed),
      centroids_(std::move(centroids)),
      idf_(k_, 1.0),
      he_medians_(k_ * kSignatureBits, 0.0),
      projection_(projection_matrix(projection_seed)) {
  if (k_ == 0 || centroids_.size() % kDescriptorDim != 0) {
    throw ConfigError("vocabulary needs at least one 128-d centroid");
  }
}

void VisualVocabulary::set_idf(std::vector<double> idf) {
  if (idf.size() != k_) throw ConfigError("idf size does not match vocabulary");
  idf_ = std::move(idf);
}

void VisualVocabulary::set_he_medians(std::vector<double> medians) {
  if (medians.size() != k_ * kSignatureBits) throw ConfigError("median table size does not match vocabulary");
  he_medians_ = std::move(medians);
}

WordId VisualVocabulary::assign(std::span<const double> v) const {
  const auto& kern = simd::active_kernels();
  double best = std::numeric_limits<double>::infinity();
  WordId best_id = 0;
  for (std::size_t w = 0; w < k_; ++w) {
    const double d = kern.squared_l2(v.data(), centroids_.data() + w * kDescriptorDim, kDescriptorDim);
    if (d < best) {
      best = d;
      best_id = static_cast<WordId>(w);
    }
  }
  return best_id;
}

std::vector<WordId> VisualVocabulary::multi_assign(std::span<const double> v) const {
  std::vector<double> dist(k_);
  simd::active_kernels().squared_l2_batch(v.data(), centroids_.data(), k_, kDescriptorDim, dist.data());
  std::vector<WordId> order(k_);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t take = std::min(kMaxMultiAssign, k_);
  auto closer = [&](WordId a, WordId b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(), closer);
  // Squared distances: d <= 1.5 d1  <=>  d^2 <= 2.25 d1^2.
  const double limit = kMultiAssignRatio * kMultiAssignRatio * dist[order[0]];
  std::vector<WordId> out;
  for (std::size_t i = 0; i < take; ++i) {
    if (i > 0 && dist[order[i]] > limit) break;
    out.push_back(order[i]);
  }
  return out;
}

std::array<double, kSignatureBits> VisualVocabulary::project(std::span<const double> v) const {
  std::array<double, kSignatureBits> out{};
  simd::active_kernels().dot_batch(v.data(), projection_.data(), kSignatureBits, kDescriptorDim, out.data());
  return out;
}

Signature VisualVocabulary::signature_from_projection(const std::array<double, kSignatureBits>& proj,
                                                      WordId word) const {
  const double* med = he_medians_.data() + static_cast<std::size_t>(word) * kSignatureBits;
  Signature sig = 0;
  for (std::size_t i = 0; i < kSignatureBits; ++i)
    if (proj[i] > med[i]) sig |= Signature{1} << i;
  return sig;
}

Signature VisualVocabulary::signature(std::span<const double> v, WordId word) const {
  return signature_from_projection(project(v), word);
}

std::vector<double> compute_he_medians(const VisualVocabulary& vocab,
                                       std::span<const double> descriptors) {
  const std::size_t n = descriptors.size() / kDescriptorDim;
  const std::size_t k = vocab.k();
  std::vector<std::vector<std::size_t>> members(k);
  std::vector<std::array<double, kSignatureBits>> projections(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto d = descriptors.subspan(i * kDescriptorDim, kDescriptorDim);
    members[vocab.assign(d)].push_back(i);
    projections[i] = vocab.project(d);
  }
  std::vector<double> medians(k * kSignatureBits, 0.0);
  std::vector<double> column;
  for (std::size_t w = 0; w < k; ++w) {
    if (members[w].empty()) continue;
    for (std::size_t b = 0; b < kSignatureBits; ++b) {
      column.clear();
      for (std::size_t i : members[w]) column.push_back(projections[i][b]);
      medians[w * kSignatureBits + b] = median_of(column);
    }
  }
  return medians;
}

std::vector<double> compute_idf(const VisualVocabulary& vocab, std::span<const FeatureSet> images) {
  const std::size_t k = vocab.k();
  std::vector<std::size_t> doc_freq(k, 0);
  std::vector<std::size_t> last_seen(k, SIZE_MAX);
  for (std::size_t img = 0; img < images.size(); ++img) {
    for (std::size_t i = 0; i < images[img].size(); ++i) {
      const WordId w = vocab.assign(images[img].descriptor(i));
      if (last_seen[w] != img) {
        last_seen[w] = img;
        ++doc_freq[w];
      }
    }
  }
  std::vector<double> idf(k, 0.0);
  if (images.empty()) return idf;
  const double n = static_cast<double>(images.size());
  for (std::size_t w = 0; w < k; ++w)
    idf[w] = std::log(n / static_cast<double>(std::max<std::size_t>(1, doc_freq[w])));
  return idf;
}

VisualVocabulary train_vocabulary(std::span<const FeatureSet> images,
                                  const VocabularyTrainingOptions& options) {
  std::vector<double> all;
  for (const FeatureSet& fs : images) all.insert(all.end(), fs.descriptors.begin(), fs.descriptors.end());
  std::size_t n = all.size() / kDescriptorDim;
  if (options.max_descriptors > 0 && n > options.max_descriptors) {
    // Partial Fisher-Yates over descriptor rows.
    Rng rng(options.seed + 1);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < options.max_descriptors; ++i)
      std::swap(idx[i], idx[i + rng.below(n - i)]);
    idx.resize(options.max_descriptors);
    std::sort(idx.begin(), idx.end());
    std::vector<double> sample;
    sample.reserve(idx.size() * kDescriptorDim);
    for (std::size_t i : idx)
      sample.insert(sample.end(), all.begin() + static_cast<std::ptrdiff_t>(i * kDescriptorDim),
                    all.begin() + static_cast<std::ptrdiff_t>((i + 1) * kDescriptorDim));
    all.swap(sample);
    n = options.max_descriptors;
  }
  KMeansResult km = train_kmeans(all, kDescriptorDim, options.k, options.seed);
  VisualVocabulary vocab(std::move(km.centroids), options.seed);
  vocab.set_he_medians(compute_he_medians(vocab, all));
  vocab.set_idf(compute_idf(vocab, images));
  return vocab;
}

namespace {
constexpr std::string_view kVocabMagic = "GCVB1";
}

void write_vocabulary(const VisualVocabulary& vocab, BinaryWriter& w) {
  w.magic(kVocabMagic);
  w.pod(static_cast<std::uint32_t>(vocab.k()));
  w.pod(static_cast<std::uint32_t>(kDescriptorDim));
  w.pod(static_cast<std::uint32_t>(kSignatureBits));
  w.pod(static_cast<std::uint64_t>(vocab.projection_seed()));
  w.array(vocab.centroids());
  w.array(vocab.idf());
  w.array(vocab.he_medians());
}

VisualVocabulary read_vocabulary(BinaryReader& r) {
  r.expect_magic(kVocabMagic);
  const auto k = r.pod<std::uint32_t>();
  const auto dim = r.pod<std::uint32_t>();
  const auto bits = r.pod<std::uint32_t>();
  const auto seed = r.pod<std::uint64_t>();
  if (k == 0 || dim != kDescriptorDim || bits != kSignatureBits) {
    throw MalformedHeaderError("unsupported vocabulary layout");
  }
  VisualVocabulary vocab(r.array<double>(static_cast<std::size_t>(k) * dim), seed);
  vocab.set_idf(r.array<double>(k));
  vocab.set_he_medians(r.array<double>(static_cast<std::size_t>(k) * bits));
  return vocab;
}

void save_vocabulary(const VisualVocabulary& vocab, const std::filesystem::path& path) {
  BinaryWriter w;
  write_vocabulary(vocab, w);
  w.save(path);
}

VisualVocabulary load_vocabulary(const std::filesystem::path& path) {
  BinaryReader r = BinaryReader::load(path);
  VisualVocabulary vocab = read_vocabulary(r);
  if (!r.at_end()) throw MalformedHeaderError("trailing bytes in vocabulary file");
  return vocab;
}

}  // namespace geocloak
