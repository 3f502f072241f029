#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "robotaxi/geo.hpp"

using namespace robotaxi::geo;

namespace {
const GeoPoint kA{35.228683, 126.844866};
const GeoPoint kB{35.227139, 126.838194};

GeoPoint random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> lat(-90.0, 90.0);
  std::uniform_real_distribution<double> lng(-180.0, 180.0);
  return {lat(rng), lng(rng)};
}
}  // namespace

TEST_CASE("distance between identical points is zero") {
  CHECK(haversine_distance(kA, kA) == 0.0);
  CHECK(haversine_distance(GeoPoint{90, 0}, GeoPoint{90, 0}) == 0.0);
}

TEST_CASE("reference pair matches the law-of-cosines oracle within 0.1%") {
  const double d = haversine_distance(kA, kB);
  CHECK(std::abs(oracle::cosine_distance(kA, kB) - oracle::kReferenceDistanceM) < 1e-6);
  CHECK(d == doctest::Approx(oracle::kReferenceDistanceM).epsilon(0.001));
  CHECK(d > 620.0);
  CHECK(d < 640.0);
}

TEST_CASE("antipodal points are half a circumference apart") {
  const double half = std::numbers::pi * kEarthRadiusM;
  CHECK(haversine_distance(GeoPoint{0.0, 0.0}, GeoPoint{0.0, 180.0}) == doctest::Approx(half).epsilon(1e-12));
  CHECK(haversine_distance(GeoPoint{90.0, 0.0}, GeoPoint{-90.0, 0.0}) == doctest::Approx(half).epsilon(1e-12));
  CHECK(half == doctest::Approx(20'015'086.796).epsilon(1e-9));
}

TEST_CASE("distance is exactly symmetric, non-negative and zero only on equal points") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 20000; ++i) {
    const GeoPoint a = random_point(rng);
    const GeoPoint b = random_point(rng);
    const double ab = haversine_distance(a, b);
    CHECK(ab == haversine_distance(b, a));
    CHECK(ab >= 0.0);
    if (!(a == b)) CHECK(ab > 0.0);
    CHECK(ab <= std::numbers::pi * kEarthRadiusM * (1 + 1e-12));
    // Oracle agreement away from the ill-conditioned near-zero range.
    if (ab > 1000.0) CHECK(ab == doctest::Approx(oracle::cosine_distance(a, b)).epsilon(1e-6));
  }
}

TEST_CASE("move_toward edge cases") {
  CHECK(move_toward(kA, kA, 10.0) == kA);
  CHECK(move_toward(kA, kB, 0.0) == kA);
  CHECK(move_toward(kA, kB, 1e6) == kB);
  CHECK(move_toward(kA, kB, haversine_distance(kA, kB)) == kB);
  CHECK_THROWS_AS(move_toward(kA, kB, -1.0), std::invalid_argument);
}

TEST_CASE("half step lands on the midpoint") {
  const double d = oracle::kReferenceDistanceM;
  const GeoPoint mid = move_toward(kA, kB, d / 2.0);
  CHECK(oracle::cosine_distance(kA, mid) == doctest::Approx(d / 2.0).epsilon(0.001));
  CHECK(oracle::cosine_distance(mid, kB) == doctest::Approx(d / 2.0).epsilon(0.001));
}

TEST_CASE("each step shortens the remaining distance by the step") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  for (int i = 0; i < 5000; ++i) {
    const GeoPoint a = random_point(rng);
    const GeoPoint b = random_point(rng);
    const double total = haversine_distance(a, b);
    if (total < 1.0 || total > 19'000'000.0) continue;  // skip near-antipodal bearings
    const double step = total * frac(rng);
    const GeoPoint p = move_toward(a, b, step);
    CHECK(is_valid(p));
    CHECK(haversine_distance(p, b) == doctest::Approx(total - step).epsilon(1e-6).scale(total));
  }
}

TEST_CASE("destination_point normalizes longitude across the antimeridian") {
  const GeoPoint p = destination_point(GeoPoint{0.0, 179.9999}, std::numbers::pi / 2, 1000.0);
  CHECK(p.longitude_deg < -179.99);
  CHECK(is_valid(p));
}

TEST_CASE("coordinate strings") {
  CHECK(parse_coord_string("35.228683, 126.844866") == GeoPoint{35.228683, 126.844866});
  CHECK(parse_coord_string("  -35.5 ,  +126  ") == GeoPoint{-35.5, 126.0});
  CHECK(render_coord_string(GeoPoint{35.228683, 126.844866}) == "35.228683, 126.844866");
  CHECK(render_coord_string(parse_coord_string("1.5,2")) == "1.500000, 2.000000");
  CHECK(render_coord_string(GeoPoint{-0.0000001, 0.0}) == "-0.000000, 0.000000");

  for (const char* bad : {"", "35.228683 126.844866", "35.2,", ",126.8", "abc, def", "91, 0", "0, 180.5",
                          "35.2, 126.8, 1", "1e3, 2", "nan, 0", ". , 1", "35., 1", "0x10, 1", "1,,2"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_coord_string(bad), MalformedCoordinate);
  }
  CHECK_THROWS_AS(make_point(0.0, 200.0), MalformedCoordinate);
}

TEST_CASE("render then parse is a fixed point at six decimals") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10000; ++i) {
    const GeoPoint p = oracle::random_wire_point(rng);
    CHECK(parse_coord_string(render_coord_string(p)) == p);
  }
}
