#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "fuzz.hpp"
#include "oracles.hpp"
#include "robotaxi/protocol.hpp"

using namespace robotaxi::protocol;
using robotaxi::geo::GeoPoint;

namespace {

nlohmann::json load_fixtures() {
  std::ifstream in(std::string(FIXTURE_DIR) + "/conformance.json");
  REQUIRE(in.good());
  return nlohmann::json::parse(in);
}

DecodeErrc decode_error_of(const std::string& text) {
  try {
    decode(text);
  } catch (const DecodeError& e) {
    return e.code();
  }
  FAIL("decoded unexpectedly: " << text);
  return DecodeErrc::MalformedJson;
}

}  // namespace

TEST_CASE("conformance corpus") {
  const auto fixtures = load_fixtures();
  REQUIRE(fixtures.size() >= 5);
  for (const auto& f : fixtures) {
    const std::string input = f.at("input");
    CAPTURE(input);
    if (f.contains("error")) {
      CHECK(error_code(decode_error_of(input)) == f.at("error").get<std::string>());
      continue;
    }
    const Message m = decode(input);
    CHECK(variant_name(m) == f.at("variant").get<std::string>());
    CHECK(encode(m) == f.at("canonical").get<std::string>());
  }
}

TEST_CASE("customer update fields") {
  const auto m = decode(R"({"ID":"Itadf","Type":"Customer","Origin":"35.228683, 126.844866"})");
  const auto& c = std::get<CustomerLocation>(m);
  CHECK(c.id == "Itadf");
  CHECK(c.origin == GeoPoint{35.228683, 126.844866});
}

TEST_CASE("ride request fields") {
  const auto m = decode(R"({"ID":"Itadf","Type":"Request","Destination":"35.227139, 126.838194"})");
  const auto& r = std::get<RideRequest>(m);
  CHECK(r.id == "Itadf");
  CHECK(r.destination == GeoPoint{35.227139, 126.838194});
}

TEST_CASE("driver update fields, with and without availability") {
  const auto plain = std::get<DriverLocation>(decode(R"({"ID":"Jignesh","Type":"Driver","Location":"35.228683, 126.844866"})"));
  CHECK(plain.id == "Jignesh");
  CHECK(plain.location == GeoPoint{35.228683, 126.844866});
  CHECK_FALSE(plain.available.has_value());

  const auto avail = std::get<DriverLocation>(
      decode(R"({"ID":"Jignesh","Type":"Driver","Location":"35.228683, 126.844866","Available":"True"})"));
  CHECK(avail.available == true);
  const auto off = std::get<DriverLocation>(
      decode(R"({"ID":"Jignesh","Type":"Driver","Location":"35.228683, 126.844866","Available":"False"})"));
  CHECK(off.available == false);
  CHECK(decode_error_of(R"({"ID":"J","Type":"Driver","Location":"1, 2","Available":"maybe"})") ==
        DecodeErrc::MissingField);
}

TEST_CASE("dispatch offer encodes to the reference string") {
  const DispatchOffer offer{"Itadf", {35.228683, 126.844866}, {35.227139, 126.838194}};
  CHECK(encode(offer) ==
        R"({"Customer":"Itadf","Origin":"35.228683, 126.844866","Destination":"35.227139, 126.838194"})");
  CHECK(std::get<DispatchOffer>(decode(encode(offer))) == offer);
}

TEST_CASE("relay update carries the reference distance") {
  const GeoPoint a{35.228683, 126.844866};
  const GeoPoint b{35.227139, 126.838194};
  const double d = std::round(robotaxi::geo::haversine_distance(a, b) * 100.0) / 100.0;
  const RelayUpdate u{"Jignesh", a, d, RidePhase::EnRouteToPickup};
  const std::string text = encode(u);
  CHECK(text == R"({"Type":"Relay","Counterpart":"Jignesh","Location":"35.228683, 126.844866","Distance":629.87,"Phase":"EnRouteToPickup"})");
  CHECK(std::get<RelayUpdate>(decode(text)).distance_m == doctest::Approx(oracle::kReferenceDistanceM).epsilon(0.001));
}

TEST_CASE("error classification") {
  CHECK(decode_error_of(R"({"ID":"x","Type":"Teleport"})") == DecodeErrc::UnknownType);
  CHECK(decode_error_of(R"({"ID":"x"})") == DecodeErrc::MissingField);
  CHECK(decode_error_of("") == DecodeErrc::MalformedJson);
  CHECK(decode_error_of("null") == DecodeErrc::MalformedJson);
  CHECK(decode_error_of(R"({"ID":"x","Type":"Customer"})") == DecodeErrc::MissingField);
  CHECK(decode_error_of(R"({"ID":7,"Type":"Customer","Origin":"1, 2"})") == DecodeErrc::MissingField);
  CHECK(decode_error_of(R"({"ID":"x","Type":"Customer","Origin":"1; 2"})") == DecodeErrc::MalformedCoordinate);
  CHECK(decode_error_of(R"({"ID":"x","Type":"Decision","Customer":"c","Accept":"yes"})") == DecodeErrc::MissingField);

  try {
    decode(R"({"ID":"x","Type":"Request"})");
  } catch (const DecodeError& e) {
    CHECK(e.field() == "Destination");
  }
}

TEST_CASE("keys are case sensitive") {
  CHECK(decode_error_of(R"({"id":"x","Type":"Customer","Origin":"1, 2"})") == DecodeErrc::MissingField);
  CHECK(decode_error_of(R"({"ID":"x","type":"Customer","Origin":"1, 2"})") == DecodeErrc::MissingField);
}

TEST_CASE("extra keys are ignored on input") {
  const auto m = decode(R"({"ID":"x","Type":"Customer","Origin":"1, 2","Speed":3})");
  CHECK(encode(m) == R"({"ID":"x","Type":"Customer","Origin":"1.000000, 2.000000"})");
}

TEST_CASE("ride phases") {
  for (auto p : {RidePhase::EnRouteToPickup, RidePhase::Occupied, RidePhase::Completed, RidePhase::Aborted}) {
    CHECK(ride_phase_from_string(to_string(p)) == p);
  }
  CHECK_FALSE(ride_phase_from_string("Flying").has_value());
  CHECK_FALSE(is_terminal(RidePhase::Occupied));
  CHECK(is_terminal(RidePhase::Completed));
}

TEST_CASE("decode after encode is the identity on generated messages") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 10000; ++i) {
    const Message m = oracle::random_message(rng);
    const std::string text = encode(m);
    CAPTURE(text);
    const Message back = decode(text);
    CHECK(back == m);
    CHECK(encode(back) == text);
  }
}

TEST_CASE("short fuzz run only ever raises DecodeError") {
  const auto r = fuzz::run(std::chrono::milliseconds(1500), 99);
  CHECK(r.cases > 1000);
  CHECK(r.foreign_exceptions == 0);
  CHECK(r.unstable == 0);
  CHECK(r.rejected > 0);
}
