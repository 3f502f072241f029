#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace robotaxi::geo {

/// Mean earth radius used for every distance in the system (spherical model).
inline constexpr double kEarthRadiusM = 6'371'000.0;

/// WGS-84 latitude/longitude pair in decimal degrees.
struct GeoPoint {
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

class MalformedCoordinate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

bool is_valid(const GeoPoint& p) noexcept;

/// Builds a point, throwing MalformedCoordinate when out of range.
GeoPoint make_point(double latitude_deg, double longitude_deg);

/// Great-circle distance in meters. Exactly symmetric in its arguments.
double haversine_distance(const GeoPoint& a, const GeoPoint& b) noexcept;

/// Initial great-circle bearing from `from` to `to`, radians clockwise from north.
double initial_bearing(const GeoPoint& from, const GeoPoint& to) noexcept;

/// Point reached by travelling `distance_m` from `origin` along `bearing_rad`.
GeoPoint destination_point(const GeoPoint& origin, double bearing_rad, double distance_m) noexcept;

/// Advances `step_m` meters from `from` toward `to` along the great circle.
/// Returns `to` exactly once the remaining distance is covered.
GeoPoint move_toward(const GeoPoint& from, const GeoPoint& to, double step_m);

/// Parses "<lat>, <lng>" with lenient whitespace.
GeoPoint parse_coord_string(std::string_view s);

/// Renders "lat, lng" with exactly six decimals.
std::string render_coord_string(const GeoPoint& p);

}  // namespace robotaxi::geo
