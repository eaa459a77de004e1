#pragma once

#include <compare>
#include <cstdint>

namespace geocloak {

inline constexpr double kEarthRadiusM = 6371000.0;

// WGS84 coordinate in decimal degrees. Latitude must lie in [-90, 90];
// longitude is wrapped into [-180, 180) on construction.
class GeoPoint {
 public:
  GeoPoint() = default;
  GeoPoint(double lat, double lon);

  double lat() const { return lat_; }
  double lon() const { return lon_; }

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
  friend auto operator<=>(const GeoPoint&, const GeoPoint&) = default;

 private:
  double lat_ = 0.0;
  double lon_ = 0.0;
};

struct GridCell {
  std::int64_t row = 0;
  std::int64_t col = 0;
  double cell_size = 1.0;

  friend bool operator==(const GridCell&, const GridCell&) = default;
  friend auto operator<=>(const GridCell&, const GridCell&) = default;
};

// Great-circle distance on a sphere of radius kEarthRadiusM.
double haversine_m(const GeoPoint& a, const GeoPoint& b);

// Cells are aligned to multiples of cell_size from (-90, -180); a point on a
// boundary belongs to the cell with the larger index.
GridCell to_cell(const GeoPoint& p, double cell_size);

// Meters spanned by one degree of latitude.
inline constexpr double kMetersPerDegree = kEarthRadiusM * 3.14159265358979323846 / 180.0;

}  // namespace geocloak
