#include <doctest.h>

#include "robotaxi/scenario.hpp"

using namespace robotaxi::sim;


TEST_CASE("bundled scenarios load") {
  const Scenario s = load_scenario(std::string(SCENARIO_DIR) + "/three_by_three.json");
  CHECK(s.avs.size() == 3);
  CHECK(s.customers.size() == 3);
  CHECK(s.grid.n == 10);
  CHECK(s.customers[0].customer_id == "Itadf");
  const Scenario e = load_scenario(std::string(SCENARIO_DIR) + "/empty.json");
  CHECK(e.avs.empty());
  CHECK(e.customers.empty());
}

TEST_CASE("omitted endpoints are drawn from the seed") {
  const std::string text =
      R"({"seed": 9, "grid": {"n": 4}, "customers": [{"id": "a"}, {"id": "b", "request_at_s": 3}]})";
  const Scenario a = parse_scenario(text);
  const Scenario b = parse_scenario(text);
  REQUIRE(a.customers.size() == 2);
  CHECK(a.customers[0].origin == b.customers[0].origin);
  CHECK(a.customers[1].destination == b.customers[1].destination);
  CHECK_FALSE(a.customers[0].origin == a.customers[0].destination);
  const Scenario c = parse_scenario(R"({"seed": 10, "grid": {"n": 4}, "customers": [{"id": "a"}, {"id": "b"}]})");
  const bool differs = !(c.customers[0].origin == a.customers[0].origin) ||
                       !(c.customers[1].origin == a.customers[1].origin);
  CHECK(differs);
}

TEST_CASE("invalid scenarios are rejected") {
  CHECK_THROWS_AS(parse_scenario("not json"), ScenarioError);
  CHECK_THROWS_AS(parse_scenario("[]"), ScenarioError);
  CHECK_THROWS_AS(parse_scenario(R"({"extra": 1})"), ScenarioError);
  CHECK_THROWS_AS(parse_scenario(R"({"grid": {"n": 0}})"), ScenarioError);
  CHECK_THROWS_AS(parse_scenario(R"({"grid": {"n": 2}, "avs": [{"id": "a", "start_node": 4}]})"), ScenarioError);
  CHECK_THROWS_AS(parse_scenario(R"({"avs": [{"id": "a", "start_node": 0, "speed_mps": 0}]})"), ScenarioError);
  CHECK_THROWS_AS(parse_scenario(R"({"avs": [{"id": "a", "start_node": 0}, {"id": "a", "start_node": 1}]})"),
                  ScenarioError);
  CHECK_THROWS_AS(parse_scenario(R"({"avs": [{"id": "a", "start_node": 0}],
                                     "customers": [{"id": "a", "origin": "1, 2", "destination": "1, 3"}]})"),
                  ScenarioError);
  CHECK_THROWS_AS(parse_scenario(R"({"customers": [{"id": "c", "origin": "1, 2", "destination": "1, 2"}]})"),
                  ScenarioError);
  CHECK_THROWS_AS(parse_scenario(R"({"customers": [{"id": "c", "origin": "1, 2", "destination": "1, 3",
                                                    "request_at_s": -1}]})"),
                  ScenarioError);
  CHECK_THROWS_AS(parse_scenario(R"({"customers": [{"id": "c", "origin": "1; 2", "destination": "1, 3"}]})"),
                  ScenarioError);
  CHECK_THROWS_AS(parse_scenario(R"({"avs": [{"id": 5, "start_node": 0}]})"), ScenarioError);
  CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), ScenarioError);
}
