#include "geocloak/manifest.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "geocloak/error.hpp"
#include "geocloak/image.hpp"

namespace geocloak {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

const std::vector<std::string> kManifestHeader = {"id", "path", "lat", "lon", "tags"};

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFoundError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!trim(line).empty()) lines.push_back(line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return lines;
}

}  // namespace

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.emplace_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(std::string_view field, std::string_view what) {
  field = trim(field);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(value)) {
    throw DataError("cannot parse " + std::string(what) + ": '" + std::string(field) + "'");
  }
  return value;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               const std::vector<std::string>& expected_header) {
  const std::string text = slurp(path);
  const auto lines = lines_of(text);
  if (lines.empty() || split_csv_line(lines.front()) != expected_header) {
    throw MalformedHeaderError("unexpected CSV header in " + path.string());
  }
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto fields = split_csv_line(lines[i]);
    if (fields.size() != expected_header.size()) {
      throw DataError(path.string() + ":" + std::to_string(i + 1) + ": expected " +
                      std::to_string(expected_header.size()) + " fields");
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

std::vector<ManifestRow> parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
  const auto lines = lines_of(text);
  if (lines.empty() || split_csv_line(lines.front()) != kManifestHeader) {
    throw MalformedHeaderError("manifest header must be id,path,lat,lon,tags");
  }
  std::vector<ManifestRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto f = split_csv_line(lines[i]);
    // A row without tags may omit the trailing comma.
    if (f.size() == 4) f.emplace_back();
    if (f.size() != 5 || f[0].empty()) {
      throw DataError("manifest line " + std::to_string(i + 1) + ": expected id,path,lat,lon,tags");
    }
    ManifestRow row;
    row.id = f[0];
    std::filesystem::path p(f[1]);
    row.path = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    row.location = GeoPoint(parse_double(f[2], "lat"), parse_double(f[3], "lon"));
    std::string_view tags = f[4];
    while (!tags.empty()) {
      const auto semi = tags.find(';');
      const auto tag = trim(tags.substr(0, semi));
      if (!tag.empty()) row.tags.emplace_back(tag);
      if (semi == std::string_view::npos) break;
      tags.remove_prefix(semi + 1);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
  return parse_manifest(slurp(path), path.parent_path());
}

std::string format_degrees(double deg) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", deg);
  return buf;
}

void write_manifest(const std::vector<ManifestRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "id,path,lat,lon,tags\n";
  for (const ManifestRow& r : rows) {
    out << r.id << ',' << r.path.string() << ',' << format_degrees(r.location.lat()) << ','
        << format_degrees(r.location.lon()) << ',';
    for (std::size_t i = 0; i < r.tags.size(); ++i) out << (i ? ";" : "") << r.tags[i];
    out << '\n';
  }
}

FeatureSet load_feature_set(const std::filesystem::path& path, std::string image_id,
                            const ExtractionParams& params) {
  if (path.extension() == ".gcft") {
    FeatureSet fs = read_features(path);
    fs.image_id = std::move(image_id);
    return fs;
  }
  return extract_features(read_image(path), params, std::move(image_id));
}

}  // namespace geocloak
