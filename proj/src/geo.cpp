#include "robotaxi/geo.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <tuple>

namespace robotaxi::geo {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

// Remaining distances below this are treated as arrival; absorbs rounding in
// the intermediate points produced by destination_point.
constexpr double kArrivalSlackM = 1e-6;

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Consumes `[+-]?\d+(\.\d+)?` starting at pos; returns the parsed value.
bool scan_decimal(std::string_view s, std::size_t& pos, double& out) {
  const std::size_t start = pos;
  if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) ++pos;
  const std::size_t int_start = pos;
  while (pos < s.size() && is_digit(s[pos])) ++pos;
  if (pos == int_start) return false;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    const std::size_t frac_start = pos;
    while (pos < s.size() && is_digit(s[pos])) ++pos;
    if (pos == frac_start) return false;
  }
  // from_chars rejects a leading '+'.
  std::size_t num_start = start;
  if (s[num_start] == '+') ++num_start;
  const auto [ptr, ec] = std::from_chars(s.data() + num_start, s.data() + pos, out);
  return ec == std::errc{} && ptr == s.data() + pos;
}

void skip_space(std::string_view s, std::size_t& pos) {
  while (pos < s.size() && is_space(s[pos])) ++pos;
}

}  // namespace

bool is_valid(const GeoPoint& p) noexcept {
  return std::isfinite(p.latitude_deg) && std::isfinite(p.longitude_deg) &&
         p.latitude_deg >= -90.0 && p.latitude_deg <= 90.0 &&
         p.longitude_deg >= -180.0 && p.longitude_deg <= 180.0;
}

GeoPoint make_point(double latitude_deg, double longitude_deg) {
  GeoPoint p{latitude_deg, longitude_deg};
  if (!is_valid(p)) throw MalformedCoordinate("coordinate out of range");
  return p;
}

double haversine_distance(const GeoPoint& a, const GeoPoint& b) noexcept {
  // Canonical argument order makes the result bit-identical under swapping.
  const auto key = [](const GeoPoint& p) { return std::tie(p.latitude_deg, p.longitude_deg); };
  const GeoPoint& p = key(a) <= key(b) ? a : b;
  const GeoPoint& q = key(a) <= key(b) ? b : a;

  const double lat1 = p.latitude_deg * kDegToRad;
  const double lat2 = q.latitude_deg * kDegToRad;
  const double dlat = lat2 - lat1;
  const double dlon = (q.longitude_deg - p.longitude_deg) * kDegToRad;
  const double s_lat = std::sin(dlat / 2.0);
  const double s_lon = std::sin(dlon / 2.0);
  double h = s_lat * s_lat + std::cos(lat1) * std::cos(lat2) * s_lon * s_lon;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

double initial_bearing(const GeoPoint& from, const GeoPoint& to) noexcept {
  const double lat1 = from.latitude_deg * kDegToRad;
  const double lat2 = to.latitude_deg * kDegToRad;
  const double dlon = (to.longitude_deg - from.longitude_deg) * kDegToRad;
  const double y = std::sin(dlon) * std::cos(lat2);
  const double x = std::cos(lat1) * std::sin(lat2) - std::sin(lat1) * std::cos(lat2) * std::cos(dlon);
  return std::atan2(y, x);
}

GeoPoint destination_point(const GeoPoint& origin, double bearing_rad, double distance_m) noexcept {
  const double delta = distance_m / kEarthRadiusM;
  const double lat1 = origin.latitude_deg * kDegToRad;
  const double lon1 = origin.longitude_deg * kDegToRad;
  const double sin_lat2 =
      std::sin(lat1) * std::cos(delta) + std::cos(lat1) * std::sin(delta) * std::cos(bearing_rad);
  const double lat2 = std::asin(std::clamp(sin_lat2, -1.0, 1.0));
  const double lon2 = lon1 + std::atan2(std::sin(bearing_rad) * std::sin(delta) * std::cos(lat1),
                                        std::cos(delta) - std::sin(lat1) * sin_lat2);
  double lon_deg = lon2 * kRadToDeg;
  // Normalize into [-180, 180].
  lon_deg = std::fmod(lon_deg + 540.0, 360.0) - 180.0;
  return {std::clamp(lat2 * kRadToDeg, -90.0, 90.0), lon_deg};
}

GeoPoint move_toward(const GeoPoint& from, const GeoPoint& to, double step_m) {
  if (!(step_m >= 0.0)) throw std::invalid_argument("move_toward: negative step");
  if (step_m == 0.0) return from;
  const double remaining = haversine_distance(from, to);
  if (step_m + kArrivalSlackM >= remaining) return to;
  return destination_point(from, initial_bearing(from, to), step_m);
}

GeoPoint parse_coord_string(std::string_view s) {
  std::size_t pos = 0;
  double lat = 0.0;
  double lng = 0.0;
  skip_space(s, pos);
  if (!scan_decimal(s, pos, lat)) throw MalformedCoordinate("expected latitude");
  skip_space(s, pos);
  if (pos >= s.size() || s[pos] != ',') throw MalformedCoordinate("expected ','");
  ++pos;
  skip_space(s, pos);
  if (!scan_decimal(s, pos, lng)) throw MalformedCoordinate("expected longitude");
  skip_space(s, pos);
  if (pos != s.size()) throw MalformedCoordinate("trailing characters");
  return make_point(lat, lng);
}

std::string render_coord_string(const GeoPoint& p) {
  char buf[64];
  const int n = std::snprintf(buf, sizeof buf, "%.6f, %.6f", p.latitude_deg, p.longitude_deg);
  return std::string(buf, static_cast<std::size_t>(n));
}

}  // namespace robotaxi::geo
