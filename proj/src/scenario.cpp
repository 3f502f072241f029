#include "robotaxi/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace robotaxi::sim {
namespace {

using Json = nlohmann::json;

void check_keys(const Json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) throw ScenarioError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ScenarioError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get(const Json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ScenarioError(where + ": missing '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ScenarioError(where + ": '" + key + "' has the wrong type");
  }
}

GeoPoint get_point(const Json& obj, const char* key, const std::string& where) {
  const auto s = get<std::string>(obj, key, where);
  try {
    return geo::parse_coord_string(s);
  } catch (const geo::MalformedCoordinate& e) {
    throw ScenarioError(where + ": '" + key + "': " + e.what());
  }
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
  const Json doc = Json::parse(json_text, nullptr, false);
  if (doc.is_discarded()) throw ScenarioError("scenario is not valid JSON");
  check_keys(doc, {"seed", "grid", "avs", "customers"}, "scenario");

  Scenario sc;
  if (doc.contains("seed")) sc.seed = get<std::uint64_t>(doc, "seed", "scenario");
  const Json& grid = doc.contains("grid") ? doc.at("grid") : Json::object();
  check_keys(grid, {"n", "spacing_m", "anchor"}, "grid");
  if (grid.contains("n")) sc.grid.n = get<int>(grid, "n", "grid");
  if (grid.contains("spacing_m")) sc.grid.spacing_m = get<double>(grid, "spacing_m", "grid");
  if (grid.contains("anchor")) sc.grid.anchor = get_point(grid, "anchor", "grid");
  if (sc.grid.n < 1) throw ScenarioError("grid: n must be >= 1");
  if (!(sc.grid.spacing_m > 0.0)) throw ScenarioError("grid: spacing_m must be > 0");

  std::set<std::string> ids;
  const auto node_count = static_cast<std::uint64_t>(sc.grid.n) * static_cast<std::uint64_t>(sc.grid.n);
  if (doc.contains("avs")) {
    if (!doc.at("avs").is_array()) throw ScenarioError("avs: expected an array");
    for (std::size_t i = 0; i < doc.at("avs").size(); ++i) {
      const Json& a = doc.at("avs")[i];
      const std::string where = "avs[" + std::to_string(i) + "]";
      check_keys(a, {"id", "start_node", "speed_mps"}, where);
      AvSpec av;
      av.id = get<std::string>(a, "id", where);
      const auto node = get<std::uint64_t>(a, "start_node", where);
      if (node >= node_count) throw ScenarioError(where + ": start_node outside the grid");
      av.start_node = static_cast<NodeId>(node);
      if (a.contains("speed_mps")) av.speed_mps = get<double>(a, "speed_mps", where);
      if (!(av.speed_mps > 0.0)) throw ScenarioError(where + ": speed_mps must be > 0");
      if (av.id.empty() || !ids.insert(av.id).second) throw ScenarioError(where + ": empty or duplicate id");
      sc.avs.push_back(std::move(av));
    }
  }
  if (doc.contains("customers")) {
    SpawnHelper spawner(make_grid_graph(sc.grid.n, sc.grid.spacing_m, sc.grid.anchor), sc.seed);
    if (!doc.at("customers").is_array()) throw ScenarioError("customers: expected an array");
    for (std::size_t i = 0; i < doc.at("customers").size(); ++i) {
      const Json& c = doc.at("customers")[i];
      const std::string where = "customers[" + std::to_string(i) + "]";
      check_keys(c, {"id", "origin", "destination", "request_at_s"}, where);
      CustomerScript cs;
      cs.customer_id = get<std::string>(c, "id", where);
      // Omitted endpoints are drawn from the seeded spawner, in document order.
      cs.origin = c.contains("origin") ? get_point(c, "origin", where) : spawner.random_point();
      if (c.contains("destination")) {
        cs.destination = get_point(c, "destination", where);
      } else if (sc.grid.n > 1) {
        do {
          cs.destination = spawner.random_point();
        } while (cs.destination == cs.origin);
      } else {
        throw ScenarioError(where + ": a 1x1 grid needs an explicit destination");
      }
      if (c.contains("request_at_s")) cs.request_at_s = get<double>(c, "request_at_s", where);
      if (!(cs.request_at_s >= 0.0)) throw ScenarioError(where + ": request_at_s must be >= 0");
      if (cs.origin == cs.destination) throw ScenarioError(where + ": origin equals destination");
      if (cs.customer_id.empty() || !ids.insert(cs.customer_id).second) {
        throw ScenarioError(where + ": empty or duplicate id");
      }
      sc.customers.push_back(std::move(cs));
    }
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace robotaxi::sim
