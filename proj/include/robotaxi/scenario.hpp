#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "robotaxi/road_graph.hpp"

namespace robotaxi::sim {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AvSpec {
  std::string id;
  NodeId start_node = 0;
  double speed_mps = 10.0;
};

/// A customer that requests a ride at `request_at_s` and waits at its origin.
struct CustomerScript {
  std::string customer_id;
  GeoPoint origin;
  GeoPoint destination;
  double request_at_s = 0.0;
};

struct GridSpec {
  int n = 2;
  double spacing_m = 100.0;
  GeoPoint anchor = kDefaultAnchor;
};

/// {seed, grid:{n, spacing_m, anchor}, avs:[{id, start_node, speed_mps}],
///  customers:[{id, origin, destination, request_at_s}]}
/// Customer origin/destination may be omitted; they are then drawn from grid
/// nodes with a generator seeded by `seed`.
struct Scenario {
  std::uint64_t seed = 0;
  GridSpec grid;
  std::vector<AvSpec> avs;
  std::vector<CustomerScript> customers;
};

/// Parses and validates a scenario document. Unknown keys, duplicate ids,
/// out-of-grid start nodes, non-positive speeds, negative request times and
/// origin == destination are all rejected with ScenarioError.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);

}  // namespace robotaxi::sim
