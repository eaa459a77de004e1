#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geocloak/geo.hpp"
#include "geocloak/manifest.hpp"

namespace geocloak {

enum class TagClass { Toponym, NotToponym, Insufficient };

std::string_view to_string(TagClass c);
TagClass parse_tag_class(std::string_view s);

struct ToponymParams {
  double cell_size = 1.0;  // degrees
  std::size_t min_count = 5;
  double concentration_threshold = 0.5;  // inclusive
};

// Occurrences of one tag over the background, at most one per image.
struct TagStats {
  std::string tag;
  std::size_t total = 0;
  std::map<GridCell, std::size_t> cell_counts;

  // Share of occurrences in the busiest cell; 0 for an unused tag.
  double concentration() const;
};

// Lowercased (ASCII) and trimmed.
std::string normalize_tag(std::string_view tag);

std::map<std::string, TagStats> collect_tag_stats(std::span<const ManifestRow> background,
                                                  double cell_size = 1.0);

// Insufficient below min_count occurrences, otherwise Toponym iff the
// concentration reaches the threshold.
TagClass classify_tag(const TagStats& stats, const ToponymParams& params = {});

using TagClassification = std::map<std::string, TagClass>;

TagClassification classify_tags(const std::map<std::string, TagStats>& stats,
                                const ToponymParams& params = {});

struct TargetSplit {
  std::vector<std::string> tagged;
  std::vector<std::string> tagless;
};

// A target is toponym-tagged iff at least one of its tags is a Toponym.
TargetSplit split_targets(std::span<const ManifestRow> targets, const TagClassification& classes);

// CSV tag,class,total,concentration.
void write_tag_table(const std::map<std::string, TagStats>& stats, const TagClassification& classes,
                     const std::filesystem::path& path);
TagClassification read_tag_table(const std::filesystem::path& path);

}  // namespace geocloak
