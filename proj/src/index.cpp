#include "geocloak/index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "geocloak/error.hpp"
#include "geocloak/simd/kernels.hpp"

namespace geocloak {

double match_weight(double idf, std::uint32_t hamming) {
  const double h = static_cast<double>(hamming);
  return idf * idf * std::exp(-(h * h) / (2.0 * kHammingSigma * kHammingSigma));
}

namespace {

struct QueryWords {
  std::vector<WordId> words;
  std::array<double, kSignatureBits> projection;
};

QueryWords describe_query(const VisualVocabulary& vocab, std::span<const double> desc) {
  return {vocab.multi_assign(desc), vocab.project(desc)};
}

// A match with the image it belongs to, before grouping.
struct PendingMatch {
  std::uint32_t image;
  Match match;
};

bool pending_less(const PendingMatch& a, const PendingMatch& b) {
  if (a.image != b.image) return a.image < b.image;
  return a.match.db_feature < b.match.db_feature;
}

// Adds the burstiness-weighted contribution of one query descriptor's
// matches, grouped by image, into scores and per-image match lists.
template <typename ScoreFn, typename SinkFn>
void accumulate_bursts(std::vector<PendingMatch>& pending, ScoreFn&& idf_of, SinkFn&& sink) {
  std::sort(pending.begin(), pending.end(), pending_less);
  std::size_t begin = 0;
  while (begin < pending.size()) {
    std::size_t end = begin;
    while (end < pending.size() && pending[end].image == pending[begin].image) ++end;
    const double burst = 1.0 / std::sqrt(static_cast<double>(end - begin));
    for (std::size_t i = begin; i < end; ++i) {
      const Match& m = pending[i].match;
      sink(pending[i].image, m, match_weight(idf_of(m.word), m.hamming) * burst);
    }
    begin = end;
  }
}

void sort_ranked(std::vector<RankedMatch>& ranked, std::size_t top_k) {
  std::sort(ranked.begin(), ranked.end(), [](const RankedMatch& a, const RankedMatch& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.image_id < b.image_id;
  });
  if (ranked.size() > top_k) ranked.resize(top_k);
}

}  // namespace

std::size_t BowIndex::posting_count() const {
  std::size_t n = 0;
  for (const PostingList& p : postings_) n += p.size();
  return n;
}

std::int64_t BowIndex::find(const std::string& id) const {
  const auto it = by_id_.find(id);
  return it == by_id_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

std::vector<RankedMatch> BowIndex::query(const FeatureSet& q, std::size_t top_k,
                                         const VisualVocabulary& vocab) const {
  if (!vocab_ || !vocab.compatible_with(*vocab_)) {
    throw ConfigError("query vocabulary does not match the index vocabulary");
  }
  return query(q, top_k);
}

std::vector<RankedMatch> BowIndex::query(const FeatureSet& q, std::size_t top_k) const {
  if (images_.empty() || q.empty() || top_k == 0) return {};
  const VisualVocabulary& vocab = *vocab_;
  const auto& kern = simd::active_kernels();
  const auto idf = vocab.idf();

  std::vector<double> raw(images_.size(), 0.0);
  std::vector<std::vector<Match>> per_image(images_.size());
  std::vector<std::uint32_t> touched;
  std::vector<PendingMatch> pending;
  std::vector<std::uint32_t> hit_idx;
  std::vector<std::uint8_t> hit_dist;

  for (std::size_t qi = 0; qi < q.size(); ++qi) {
    const QueryWords qw = describe_query(vocab, q.descriptor(qi));
    pending.clear();
    for (WordId w : qw.words) {
      const PostingList& list = postings_[w];
      if (list.size() == 0) continue;
      const Signature sig = vocab.signature_from_projection(qw.projection, w);
      hit_idx.resize(list.size());
      hit_dist.resize(list.size());
      const std::size_t hits = kern.hamming_within(sig, list.signatures.data(), list.size(),
                                                   kHammingThreshold, hit_idx.data(), hit_dist.data());
      for (std::size_t h = 0; h < hits; ++h) {
        const std::uint32_t at = hit_idx[h];
        pending.push_back({list.images[at],
                           Match{static_cast<std::uint32_t>(qi), list.features[at], w, hit_dist[h]}});
      }
    }
    accumulate_bursts(
        pending, [&](WordId w) { return idf[w]; },
        [&](std::uint32_t image, const Match& m, double weight) {
          if (per_image[image].empty()) touched.push_back(image);
          per_image[image].push_back(m);
          raw[image] += weight;
        });
  }

  std::vector<RankedMatch> ranked;
  ranked.reserve(touched.size());
  for (std::uint32_t image : touched) {
    RankedMatch rm;
    rm.image = image;
    rm.image_id = images_[image].id;
    rm.score = raw[image] / std::sqrt(static_cast<double>(images_[image].descriptor_count()));
    rm.matches = std::move(per_image[image]);
    ranked.push_back(std::move(rm));
  }
  sort_ranked(ranked, top_k);
  return ranked;
}

BowIndexBuilder::BowIndexBuilder(std::shared_ptr<const VisualVocabulary> vocab)
    : vocab_(std::move(vocab)) {
  if (!vocab_ || vocab_->k() == 0) throw ConfigError("index needs a trained vocabulary");
  postings_.resize(vocab_->k());
}

void BowIndexBuilder::add(std::string id, const FeatureSet& features, const GeoPoint& location,
                          std::vector<std::string> tags) {
  if (seen_.count(id) != 0) throw IngestionError("duplicate image id: " + id);
  const auto ordinal = static_cast<std::uint32_t>(images_.size());
  seen_.emplace(id, ordinal);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto desc = features.descriptor(i);
    const WordId w = vocab_->assign(desc);
    PostingList& list = postings_[w];
    list.images.push_back(ordinal);
    list.features.push_back(static_cast<std::uint32_t>(i));
    list.signatures.push_back(vocab_->signature(desc, w));
  }
  images_.push_back(ImageMeta{std::move(id), location, std::move(tags), features.keypoints});
}

BowIndex BowIndexBuilder::finish() && {
  // Renumber images in id order.
  std::vector<std::uint32_t> order(images_.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t a, std::uint32_t b) { return images_[a].id < images_[b].id; });
  std::vector<std::uint32_t> remap(images_.size());
  for (std::uint32_t rank = 0; rank < order.size(); ++rank) remap[order[rank]] = rank;

  BowIndex index;
  index.vocab_ = vocab_;
  index.images_.reserve(images_.size());
  for (std::uint32_t old : order) index.images_.push_back(std::move(images_[old]));
  for (std::uint32_t i = 0; i < index.images_.size(); ++i) index.by_id_.emplace(index.images_[i].id, i);

  index.postings_.resize(postings_.size());
  std::vector<std::size_t> perm;
  for (std::size_t w = 0; w < postings_.size(); ++w) {
    const PostingList& src = postings_[w];
    perm.resize(src.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
      const auto ia = remap[src.images[a]];
      const auto ib = remap[src.images[b]];
      return ia != ib ? ia < ib : src.features[a] < src.features[b];
    });
    PostingList& dst = index.postings_[w];
    dst.images.reserve(src.size());
    dst.features.reserve(src.size());
    dst.signatures.reserve(src.size());
    for (std::size_t p : perm) {
      dst.images.push_back(remap[src.images[p]]);
      dst.features.push_back(src.features[p]);
      dst.signatures.push_back(src.signatures[p]);
    }
  }
  postings_.clear();
  images_.clear();
  seen_.clear();
  return index;
}

BowIndex build_index(std::span<const ImageRecord> records,
                     std::shared_ptr<const VisualVocabulary> vocab) {
  BowIndexBuilder builder(std::move(vocab));
  for (const ImageRecord& r : records) builder.add(r.id, r.features, r.location, r.tags);
  return std::move(builder).finish();
}

std::vector<RankedMatch> brute_force_score(std::span<const ImageRecord> records,
                                           const VisualVocabulary& vocab, const FeatureSet& q,
                                           std::size_t top_k) {
  if (records.empty() || q.empty() || top_k == 0) return {};
  // Image ordinals follow id order, as in the index.
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return records[a].id < records[b].id; });

  struct DbDescriptor {
    WordId word;
    Signature signature;
  };
  std::vector<std::vector<DbDescriptor>> db(records.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const FeatureSet& fs = records[order[rank]].features;
    for (std::size_t j = 0; j < fs.size(); ++j) {
      const WordId w = vocab.assign(fs.descriptor(j));
      db[rank].push_back({w, vocab.signature(fs.descriptor(j), w)});
    }
  }

  std::vector<QueryWords> qwords;
  for (std::size_t qi = 0; qi < q.size(); ++qi) qwords.push_back(describe_query(vocab, q.descriptor(qi)));
  const auto idf = vocab.idf();

  std::vector<RankedMatch> ranked;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    RankedMatch rm;
    rm.image = static_cast<std::uint32_t>(rank);
    rm.image_id = records[order[rank]].id;
    double raw = 0.0;
    for (std::size_t qi = 0; qi < q.size(); ++qi) {
      std::vector<Match> hits;
      for (std::size_t j = 0; j < db[rank].size(); ++j) {
        const DbDescriptor& d = db[rank][j];
        const auto& words = qwords[qi].words;
        if (std::find(words.begin(), words.end(), d.word) == words.end()) continue;
        const Signature qsig = vocab.signature_from_projection(qwords[qi].projection, d.word);
        const auto h = static_cast<std::uint32_t>(std::popcount(qsig ^ d.signature));
        if (h > kHammingThreshold) continue;
        hits.push_back(Match{static_cast<std::uint32_t>(qi), static_cast<std::uint32_t>(j), d.word,
                             static_cast<std::uint8_t>(h)});
      }
      const double burst = hits.empty() ? 0.0 : 1.0 / std::sqrt(static_cast<double>(hits.size()));
      for (const Match& m : hits) {
        raw += match_weight(idf[m.word], m.hamming) * burst;
        rm.matches.push_back(m);
      }
    }
    if (rm.matches.empty()) continue;
    rm.score = raw / std::sqrt(static_cast<double>(db[rank].size()));
    ranked.push_back(std::move(rm));
  }
  sort_ranked(ranked, top_k);
  return ranked;
}

void BowIndex::write(BinaryWriter& w) const {
  write_vocabulary(*vocab_, w);
  w.pod(static_cast<std::uint32_t>(images_.size()));
  for (const ImageMeta& m : images_) {
    w.string(m.id);
    w.pod(m.location.lat());
    w.pod(m.location.lon());
    w.pod(static_cast<std::uint32_t>(m.tags.size()));
    for (const std::string& t : m.tags) w.string(t);
    w.pod(static_cast<std::uint32_t>(m.keypoints.size()));
    for (const Keypoint& kp : m.keypoints) {
      w.pod(kp.x);
      w.pod(kp.y);
      w.pod(kp.scale);
      w.pod(kp.orientation);
    }
  }
  for (const PostingList& p : postings_) {
    w.pod(static_cast<std::uint32_t>(p.size()));
    w.array(std::span<const std::uint32_t>(p.images));
    w.array(std::span<const std::uint32_t>(p.features));
    w.array(std::span<const Signature>(p.signatures));
  }
}

BowIndex BowIndex::read(BinaryReader& r) {
  BowIndex index;
  index.vocab_ = std::make_shared<const VisualVocabulary>(read_vocabulary(r));
  const auto n = r.pod<std::uint32_t>();
  index.images_.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    ImageMeta& m = index.images_[i];
    m.id = r.string();
    const double lat = r.pod<double>();
    const double lon = r.pod<double>();
    m.location = GeoPoint(lat, lon);
    const auto tags = r.pod<std::uint32_t>();
    for (std::uint32_t t = 0; t < tags; ++t) m.tags.push_back(r.string());
    const auto kps = r.pod<std::uint32_t>();
    if (kps > r.remaining() / (4 * sizeof(double))) throw TruncatedDataError("index keypoints truncated");
    m.keypoints.resize(kps);
    for (Keypoint& kp : m.keypoints) {
      kp.x = r.pod<double>();
      kp.y = r.pod<double>();
      kp.scale = r.pod<double>();
      kp.orientation = r.pod<double>();
    }
    if (i > 0 && !(index.images_[i - 1].id < m.id)) throw MalformedHeaderError("index images not sorted by id");
    index.by_id_.emplace(m.id, i);
  }
  index.postings_.resize(index.vocab_->k());
  for (PostingList& p : index.postings_) {
    const auto count = r.pod<std::uint32_t>();
    p.images = r.array<std::uint32_t>(count);
    p.features = r.array<std::uint32_t>(count);
    p.signatures = r.array<Signature>(count);
    for (std::size_t i = 0; i < count; ++i) {
      if (p.images[i] >= n || p.features[i] >= index.images_[p.images[i]].keypoints.size()) {
        throw MalformedHeaderError("posting references a missing image or keypoint");
      }
    }
  }
  return index;
}

}  // namespace geocloak
