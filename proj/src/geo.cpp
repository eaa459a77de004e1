#include "geocloak/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "geocloak/error.hpp"

namespace geocloak {
namespace {

double normalize_lon(double lon) {
  double wrapped = std::fmod(lon + 180.0, 360.0);
  if (wrapped < 0.0) wrapped += 360.0;
  // fmod can hand back exactly 360 after the negative correction.
  if (wrapped >= 360.0) wrapped -= 360.0;
  return wrapped - 180.0;
}

double radians(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

GeoPoint::GeoPoint(double lat, double lon) {
  if (!std::isfinite(lat) || !std::isfinite(lon)) {
    throw DataError("coordinate is not finite");
  }
  if (lat < -90.0 || lat > 90.0) {
    throw DataError("latitude out of range: " + std::to_string(lat));
  }
  lat_ = lat;
  lon_ = normalize_lon(lon);
}

double haversine_m(const GeoPoint& a, const GeoPoint& b) {
  // Evaluate in a canonical argument order so the result is bit-symmetric.
  const GeoPoint& p = std::min(a, b);
  const GeoPoint& q = std::max(a, b);
  const double lat1 = radians(p.lat());
  const double lat2 = radians(q.lat());
  const double dlat = lat2 - lat1;
  const double dlon = radians(q.lon() - p.lon());
  const double s_lat = std::sin(dlat / 2.0);
  const double s_lon = std::sin(dlon / 2.0);
  const double h = s_lat * s_lat + std::cos(lat1) * std::cos(lat2) * s_lon * s_lon;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

GridCell to_cell(const GeoPoint& p, double cell_size) {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
    throw ConfigError("cell size must be positive");
  }
  GridCell cell;
  cell.row = static_cast<std::int64_t>(std::floor((p.lat() + 90.0) / cell_size));
  cell.col = static_cast<std::int64_t>(std::floor((p.lon() + 180.0) / cell_size));
  cell.cell_size = cell_size;
  return cell;
}

}  // namespace geocloak
