#include "geocloak/toponym.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>

#include "geocloak/error.hpp"

namespace geocloak {

std::string_view to_string(TagClass c) {
  switch (c) {
    case TagClass::Toponym: return "toponym";
    case TagClass::NotToponym: return "not_toponym";
    case TagClass::Insufficient: return "insufficient";
  }
  return "?";
}

TagClass parse_tag_class(std::string_view s) {
  if (s == "toponym") return TagClass::Toponym;
  if (s == "not_toponym") return TagClass::NotToponym;
  if (s == "insufficient") return TagClass::Insufficient;
  throw DataError("unknown tag class: " + std::string(s));
}

double TagStats::concentration() const {
  if (total == 0) return 0.0;
  std::size_t peak = 0;
  for (const auto& [cell, count] : cell_counts) peak = std::max(peak, count);
  return static_cast<double>(peak) / static_cast<double>(total);
}

std::string normalize_tag(std::string_view tag) {
  while (!tag.empty() && std::isspace(static_cast<unsigned char>(tag.front()))) tag.remove_prefix(1);
  while (!tag.empty() && std::isspace(static_cast<unsigned char>(tag.back()))) tag.remove_suffix(1);
  std::string out(tag);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::map<std::string, TagStats> collect_tag_stats(std::span<const ManifestRow> background,
                                                  double cell_size) {
  std::map<std::string, TagStats> stats;
  for (const ManifestRow& row : background) {
    const GridCell cell = to_cell(row.location, cell_size);
    std::set<std::string> seen;
    for (const std::string& raw : row.tags) {
      std::string tag = normalize_tag(raw);
      if (tag.empty() || !seen.insert(tag).second) continue;
      TagStats& s = stats[tag];
      s.tag = tag;
      ++s.total;
      ++s.cell_counts[cell];
    }
  }
  return stats;
}

TagClass classify_tag(const TagStats& stats, const ToponymParams& params) {
  if (stats.total < params.min_count) return TagClass::Insufficient;
  // Same quotient as the reported concentration, so the table and the class
  // never disagree at the boundary.
  return stats.concentration() >= params.concentration_threshold ? TagClass::Toponym : TagClass::NotToponym;
}

TagClassification classify_tags(const std::map<std::string, TagStats>& stats,
                                const ToponymParams& params) {
  TagClassification out;
  for (const auto& [tag, s] : stats) out.emplace(tag, classify_tag(s, params));
  return out;
}

TargetSplit split_targets(std::span<const ManifestRow> targets, const TagClassification& classes) {
  TargetSplit split;
  for (const ManifestRow& row : targets) {
    const bool tagged = std::any_of(row.tags.begin(), row.tags.end(), [&](const std::string& t) {
      const auto it = classes.find(normalize_tag(t));
      return it != classes.end() && it->second == TagClass::Toponym;
    });
    (tagged ? split.tagged : split.tagless).push_back(row.id);
  }
  return split;
}

void write_tag_table(const std::map<std::string, TagStats>& stats, const TagClassification& classes,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "tag,class,total,concentration\n";
  for (const auto& [tag, s] : stats) {
    char conc[32];
    std::snprintf(conc, sizeof conc, "%.4f", s.concentration());
    out << tag << ',' << to_string(classes.at(tag)) << ',' << s.total << ',' << conc << '\n';
  }
}

TagClassification read_tag_table(const std::filesystem::path& path) {
  TagClassification out;
  for (const auto& row : read_csv(path, {"tag", "class", "total", "concentration"})) {
    out.emplace(row[0], parse_tag_class(row[1]));
  }
  return out;
}

}  // namespace geocloak
