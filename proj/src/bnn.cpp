#include "geocloak/bnn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "geocloak/error.hpp"
#include "geocloak/simd/kernels.hpp"

namespace geocloak {

BowHistogram bow_histogram(const FeatureSet& features, const VisualVocabulary& vocab) {
  BowHistogram h;
  h.image_id = features.image_id;
  h.values.assign(vocab.k(), 0.0);
  for (std::size_t i = 0; i < features.size(); ++i) h.values[vocab.assign(features.descriptor(i))] += 1.0;
  h.empty = features.empty();
  if (!h.empty) normalize_descriptor(h.values);
  return h;
}

namespace {

bool hit_less(const NeighborHit& a, const NeighborHit& b) {
  return a.squared_distance < b.squared_distance ||
         (a.squared_distance == b.squared_distance && a.point < b.point);
}

}  // namespace

KdForest::KdForest(std::span<const double> points, std::size_t dim, const KdForestParams& params)
    : points_(points), dim_(dim), params_(params) {
  if (dim == 0 || points.size() % dim != 0) throw ConfigError("forest points are not a multiple of dim");
  if (params.trees < 1 || params.leaf_size < 1 || params.top_variance_dims < 1) {
    throw ConfigError("invalid kd-forest parameters");
  }
  n_ = points.size() / dim;
  if (n_ == 0) return;
  Rng rng(params.seed);
  for (int t = 0; t < params.trees; ++t) {
    std::vector<std::uint32_t> idx(n_);
    std::iota(idx.begin(), idx.end(), 0);
    roots_.push_back(build_node(idx, 0, n_, rng));
  }
}

std::int32_t KdForest::build_node(std::vector<std::uint32_t>& idx, std::size_t begin,
                                  std::size_t end, Rng& rng) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.emplace_back();
  const std::size_t count = end - begin;
  auto make_leaf = [&] {
    Node& leaf = nodes_[static_cast<std::size_t>(id)];
    leaf.begin = static_cast<std::uint32_t>(leaf_points_.size());
    leaf_points_.insert(leaf_points_.end(), idx.begin() + static_cast<std::ptrdiff_t>(begin),
                        idx.begin() + static_cast<std::ptrdiff_t>(end));
    leaf.end = static_cast<std::uint32_t>(leaf_points_.size());
    return id;
  };
  if (count <= params_.leaf_size) return make_leaf();

  std::vector<double> mean(dim_, 0.0);
  std::vector<double> var(dim_, 0.0);
  std::vector<std::uint8_t> spread(dim_, 0);
  const double* first = points_.data() + static_cast<std::size_t>(idx[begin]) * dim_;
  for (std::size_t i = begin; i < end; ++i) {
    const double* p = points_.data() + static_cast<std::size_t>(idx[i]) * dim_;
    for (std::size_t d = 0; d < dim_; ++d) {
      mean[d] += p[d];
      spread[d] |= p[d] != first[d];
    }
  }
  for (double& m : mean) m /= static_cast<double>(count);
  for (std::size_t i = begin; i < end; ++i) {
    const double* p = points_.data() + static_cast<std::size_t>(idx[i]) * dim_;
    for (std::size_t d = 0; d < dim_; ++d) var[d] += (p[d] - mean[d]) * (p[d] - mean[d]);
  }
  std::vector<std::uint32_t> dims;
  for (std::uint32_t d = 0; d < dim_; ++d)
    if (spread[d]) dims.push_back(d);
  if (dims.empty()) return make_leaf();  // identical points
  const std::size_t top = std::min(params_.top_variance_dims, dims.size());
  std::partial_sort(dims.begin(), dims.begin() + static_cast<std::ptrdiff_t>(top), dims.end(),
                    [&](std::uint32_t a, std::uint32_t b) { return var[a] > var[b] || (var[a] == var[b] && a < b); });
  const std::uint32_t split_dim = dims[rng.below(top)];

  // Median split that never separates equal values: the threshold sits
  // halfway between two adjacent distinct values, on whichever side of the
  // median value gives the more balanced partition.
  auto value = [&](std::uint32_t p) { return points_[static_cast<std::size_t>(p) * dim_ + split_dim]; };
  std::vector<double> vals(count);
  for (std::size_t i = 0; i < count; ++i) vals[i] = value(idx[begin + i]);
  std::sort(vals.begin(), vals.end());
  const double median = vals[count / 2];
  const auto lo = static_cast<std::size_t>(std::lower_bound(vals.begin(), vals.end(), median) - vals.begin());
  const auto hi = static_cast<std::size_t>(std::upper_bound(vals.begin(), vals.end(), median) - vals.begin());
  const auto imbalance = [&](std::size_t left) { return left > count / 2 ? left - count / 2 : count / 2 - left; };
  double split;
  if (lo > 0 && (hi == count || imbalance(lo) <= imbalance(hi))) {
    split = vals[lo - 1] + 0.5 * (median - vals[lo - 1]);
    if (!(split > vals[lo - 1])) split = median;
  } else {
    split = median + 0.5 * (vals[hi] - median);
    if (!(split > median)) split = vals[hi];
  }
  const auto mid_it = std::stable_partition(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                                            idx.begin() + static_cast<std::ptrdiff_t>(end),
                                            [&](std::uint32_t p) { return value(p) < split; });
  const auto mid = static_cast<std::size_t>(mid_it - idx.begin());

  const std::int32_t left = build_node(idx, begin, mid, rng);
  const std::int32_t right = build_node(idx, mid, end, rng);
  Node& node = nodes_[static_cast<std::size_t>(id)];
  node.left = left;
  node.right = right;
  node.dim = split_dim;
  node.split = split;
  return id;
}

void KdForest::search(std::span<const double> query, std::size_t max_checks, std::size_t k,
                      std::vector<NeighborHit>& pool) const {
  if (query.size() != dim_) throw ConfigError("query dimension does not match the forest");
  const auto& kern = simd::active_kernels();
  struct Branch {
    double priority;  // accumulated squared offsets, an estimate
    double bound;     // largest single offset, a true lower bound
    std::int32_t node;
    bool operator>(const Branch& o) const {
      return priority > o.priority || (priority == o.priority && node > o.node);
    }
  };
  std::priority_queue<Branch, std::vector<Branch>, std::greater<>> queue;
  std::vector<std::uint8_t> visited(n_, 0);
  std::size_t checks = 0;

  auto worst = [&]() {
    return pool.size() < k ? std::numeric_limits<double>::infinity() : pool.back().squared_distance;
  };
  auto offer = [&](std::uint32_t p, double d) {
    const NeighborHit hit{p, d};
    if (pool.size() == k && !hit_less(hit, pool.back())) return;
    pool.insert(std::upper_bound(pool.begin(), pool.end(), hit, hit_less), hit);
    if (pool.size() > k) pool.pop_back();
  };

  // Descends to a leaf, queueing the far side of every split on the way.
  auto descend = [&](std::int32_t node_id, double priority, double bound) {
    for (;;) {
      const Node& node = nodes_[static_cast<std::size_t>(node_id)];
      if (node.left < 0) {
        bool fresh = false;
        for (std::uint32_t i = node.begin; i < node.end; ++i) {
          const std::uint32_t p = leaf_points_[i];
          if (visited[p]) continue;
          visited[p] = 1;
          fresh = true;
          offer(p, kern.squared_l2(query.data(), points_.data() + static_cast<std::size_t>(p) * dim_, dim_));
        }
        // Leaves already covered by other trees are free.
        checks += fresh;
        return;
      }
      const double diff = query[node.dim] - node.split;
      const std::int32_t near = diff < 0.0 ? node.left : node.right;
      const std::int32_t far = diff < 0.0 ? node.right : node.left;
      queue.push({priority + diff * diff, std::max(bound, diff * diff), far});
      node_id = near;
    }
  };

  for (std::int32_t root : roots_) {
    descend(root, 0.0, 0.0);
    if (checks >= max_checks) return;
  }
  while (!queue.empty() && checks < max_checks) {
    const Branch b = queue.top();
    queue.pop();
    // Ties at the bound may still hold a lower-index point at equal distance.
    if (b.bound > worst()) continue;
    descend(b.node, b.priority, b.bound);
  }
}

NeighborHit KdForest::nearest(std::span<const double> query, std::size_t max_checks) const {
  if (n_ == 0) throw DataError("nearest-neighbour search on an empty forest");
  std::vector<NeighborHit> pool;
  search(query, std::max<std::size_t>(1, max_checks), 1, pool);
  return pool.front();
}

std::vector<NeighborHit> KdForest::nearest_k(std::span<const double> query, std::size_t k,
                                             std::size_t max_checks) const {
  if (n_ == 0) throw DataError("nearest-neighbour search on an empty forest");
  std::vector<NeighborHit> pool;
  if (k == 0) return pool;
  search(query, std::max<std::size_t>(1, max_checks), k, pool);
  return pool;
}

std::vector<std::vector<std::uint32_t>> KdForest::leaves_of_tree(int tree) const {
  std::vector<std::vector<std::uint32_t>> leaves;
  std::vector<std::int32_t> stack{roots_.at(static_cast<std::size_t>(tree))};
  while (!stack.empty()) {
    const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (node.left < 0) {
      leaves.emplace_back(leaf_points_.begin() + node.begin, leaf_points_.begin() + node.end);
    } else {
      stack.push_back(node.right);
      stack.push_back(node.left);
    }
  }
  return leaves;
}

NeighborHit linear_scan_nearest(std::span<const double> points, std::size_t dim,
                                std::span<const double> query) {
  const std::size_t n = points.size() / dim;
  if (n == 0) throw DataError("nearest-neighbour search on an empty set");
  const auto& kern = simd::active_kernels();
  NeighborHit best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < n; ++i) {
    const double d = kern.squared_l2(query.data(), points.data() + i * dim, dim);
    if (d < best.squared_distance) best = {static_cast<std::uint32_t>(i), d};
  }
  return best;
}

BnnIndex::BnnIndex(std::shared_ptr<const VisualVocabulary> vocab, const KdForestParams& params)
    : vocab_(std::move(vocab)), params_(params) {
  if (!vocab_) throw ConfigError("baseline index needs a vocabulary");
}

void BnnIndex::add(std::string id, const FeatureSet& features, const GeoPoint& location) {
  BowHistogram h = bow_histogram(features, *vocab_);
  h.image_id = std::move(id);
  add_histogram(std::move(h), location);
}

void BnnIndex::add_histogram(BowHistogram hist, const GeoPoint& location) {
  if (hist.values.size() != vocab_->k()) throw ConfigError("histogram size does not match vocabulary");
  entries_.push_back({std::move(hist.image_id), location});
  histograms_.insert(histograms_.end(), hist.values.begin(), hist.values.end());
  empty_.push_back(hist.empty ? 1 : 0);
  built_ = false;
}

void BnnIndex::replace(const std::string& id, const FeatureSet& features) {
  const auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.id == id; });
  if (it == entries_.end()) throw DataError("cannot replace unknown image " + id);
  const auto i = static_cast<std::size_t>(it - entries_.begin());
  const BowHistogram h = bow_histogram(features, *vocab_);
  std::copy(h.values.begin(), h.values.end(), histograms_.begin() + static_cast<std::ptrdiff_t>(i * vocab_->k()));
  empty_[i] = h.empty ? 1 : 0;
  built_ = false;
}

void BnnIndex::build() {
  const std::size_t k = vocab_->k();
  searchable_.clear();
  searchable_to_entry_.clear();
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (empty_[i]) continue;
    searchable_.insert(searchable_.end(), histograms_.begin() + static_cast<std::ptrdiff_t>(i * k),
                       histograms_.begin() + static_cast<std::ptrdiff_t>((i + 1) * k));
    searchable_to_entry_.push_back(static_cast<std::uint32_t>(i));
  }
  forest_ = KdForest(searchable_, k, params_);
  built_ = true;
}

std::span<const double> BnnIndex::histogram(std::size_t i) const {
  return std::span<const double>(histograms_).subspan(i * vocab_->k(), vocab_->k());
}

std::optional<std::size_t> BnnIndex::search(const BowHistogram& q, std::size_t max_checks) const {
  if (!built_) throw ConfigError("baseline index searched before build()");
  if (forest_.empty()) throw DataError("baseline index has no searchable images");
  if (q.empty) return std::nullopt;
  return searchable_to_entry_[forest_.nearest(q.values, max_checks).point];
}

std::vector<std::size_t> BnnIndex::search_k(const BowHistogram& q, std::size_t k,
                                            std::size_t max_checks) const {
  if (!built_) throw ConfigError("baseline index searched before build()");
  if (forest_.empty()) throw DataError("baseline index has no searchable images");
  std::vector<std::size_t> out;
  if (q.empty) return out;
  for (const NeighborHit& h : forest_.nearest_k(q.values, k, max_checks)) out.push_back(searchable_to_entry_[h.point]);
  return out;
}

std::unique_ptr<BnnIndex> BnnIndex::clone() const {
  auto copy = std::make_unique<BnnIndex>(vocab_, params_);
  copy->entries_ = entries_;
  copy->histograms_ = histograms_;
  copy->empty_ = empty_;
  if (built_) copy->build();
  return copy;
}

void BnnIndex::write(BinaryWriter& w) const {
  write_vocabulary(*vocab_, w);
  w.pod(static_cast<std::uint32_t>(params_.trees));
  w.pod(static_cast<std::uint64_t>(params_.leaf_size));
  w.pod(static_cast<std::uint64_t>(params_.top_variance_dims));
  w.pod(params_.seed);
  w.pod(static_cast<std::uint32_t>(entries_.size()));
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    w.string(entries_[i].id);
    w.pod(entries_[i].location.lat());
    w.pod(entries_[i].location.lon());
    w.pod(empty_[i]);
  }
  w.array(std::span<const double>(histograms_));
}

std::unique_ptr<BnnIndex> BnnIndex::read(BinaryReader& r) {
  auto vocab = std::make_shared<const VisualVocabulary>(read_vocabulary(r));
  KdForestParams params;
  params.trees = static_cast<int>(r.pod<std::uint32_t>());
  params.leaf_size = r.pod<std::uint64_t>();
  params.top_variance_dims = r.pod<std::uint64_t>();
  params.seed = r.pod<std::uint64_t>();
  auto index = std::make_unique<BnnIndex>(vocab, params);
  const auto n = r.pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string id = r.string();
    const double lat = r.pod<double>();
    const double lon = r.pod<double>();
    index->entries_.push_back({std::move(id), GeoPoint(lat, lon)});
    index->empty_.push_back(r.pod<std::uint8_t>());
  }
  index->histograms_ = r.array<double>(static_cast<std::size_t>(n) * vocab->k());
  index->build();
  return index;
}

std::optional<std::string> bnn_search(const BnnIndex& index, const BowHistogram& q,
                                      std::size_t max_checks) {
  const auto hit = index.search(q, max_checks);
  if (!hit) return std::nullopt;
  return index.entry(*hit).id;
}

}  // namespace geocloak
