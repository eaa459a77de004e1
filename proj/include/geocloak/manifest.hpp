#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "geocloak/features.hpp"
#include "geocloak/geo.hpp"

namespace geocloak {

// One row of a manifest CSV: id,path,lat,lon,tags (tags ';'-separated).
struct ManifestRow {
  std::string id;
  std::filesystem::path path;  // resolved against the manifest's directory
  GeoPoint location;
  std::vector<std::string> tags;
};

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);
std::vector<ManifestRow> parse_manifest(std::string_view text, const std::filesystem::path& base_dir);
void write_manifest(const std::vector<ManifestRow>& rows, const std::filesystem::path& path);

// Comma-separated fields of one line; no quoting.
std::vector<std::string> split_csv_line(std::string_view line);

// Reads a CSV file, checks the header row, returns data rows.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               const std::vector<std::string>& expected_header);

double parse_double(std::string_view field, std::string_view what);

// Decimal degrees with 6 fractional digits.
std::string format_degrees(double deg);

// Feature sets come from a GCFT1 dump when the path ends in ".gcft", else
// from extracting the image. Raises IngestionError subclasses.
FeatureSet load_feature_set(const std::filesystem::path& path, std::string image_id,
                            const ExtractionParams& params = {});

}  // namespace geocloak
