#include "robotaxi/road_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>

namespace robotaxi::sim {

NodeId RoadGraph::add_node(const GeoPoint& p) {
  if (!geo::is_valid(p)) throw std::invalid_argument("add_node: invalid coordinate");
  nodes_.push_back(p);
  adjacency_.emplace_back();
  component_.push_back(static_cast<std::uint32_t>(nodes_.size() - 1));
  return static_cast<NodeId>(nodes_.size() - 1);
}

void RoadGraph::add_edge(NodeId a, NodeId b) {
  if (a >= nodes_.size() || b >= nodes_.size()) throw std::invalid_argument("add_edge: unknown node");
  if (a == b) throw std::invalid_argument("add_edge: self-loop");
  const auto has = [&](NodeId from, NodeId to) {
    return std::any_of(adjacency_[from].begin(), adjacency_[from].end(), [&](const Edge& e) { return e.to == to; });
  };
  if (has(a, b)) throw std::invalid_argument("add_edge: duplicate edge");
  const double w = geo::haversine_distance(nodes_[a], nodes_[b]);
  if (!(w > 0.0)) throw std::invalid_argument("add_edge: zero-length edge");
  const auto insert_sorted = [](std::vector<Edge>& list, Edge e) {
    list.insert(std::upper_bound(list.begin(), list.end(), e, [](const Edge& x, const Edge& y) { return x.to < y.to; }),
                e);
  };
  insert_sorted(adjacency_[a], {b, w});
  insert_sorted(adjacency_[b], {a, w});
  ++edge_count_;
  const std::uint32_t ca = component_[a];
  const std::uint32_t cb = component_[b];
  if (ca != cb) relabel_components();
}

void RoadGraph::relabel_components() {
  constexpr auto kUnset = std::numeric_limits<std::uint32_t>::max();
  std::fill(component_.begin(), component_.end(), kUnset);
  std::vector<NodeId> stack;
  for (NodeId start = 0; start < nodes_.size(); ++start) {
    if (component_[start] != kUnset) continue;
    component_[start] = start;
    stack.push_back(start);
    while (!stack.empty()) {
      const NodeId n = stack.back();
      stack.pop_back();
      for (const Edge& e : adjacency_[n]) {
        if (component_[e.to] == kUnset) {
          component_[e.to] = start;
          stack.push_back(e.to);
        }
      }
    }
  }
}

void validate(const SearchPolicy& policy) {
  if (!(policy.initial_radius_m > 0.0)) throw std::invalid_argument("initial_radius_m must be > 0");
  if (!(policy.growth_factor > 1.0)) throw std::invalid_argument("growth_factor must be > 1");
  if (!(policy.initial_radius_m <= policy.max_radius_m)) {
    throw std::invalid_argument("initial_radius_m must not exceed max_radius_m");
  }
}

SnapResult snap_to_graph(const GeoPoint& p, const RoadGraph& graph, const SearchPolicy& policy) {
  validate(policy);
  if (graph.empty()) throw NoNodeInRange("snap_to_graph: empty graph");
  std::vector<double> dist(graph.node_count());
  for (NodeId n = 0; n < graph.node_count(); ++n) dist[n] = geo::haversine_distance(p, graph.position(n));

  double radius = policy.initial_radius_m;
  for (;;) {
    const double probe = std::min(radius, policy.max_radius_m);
    std::optional<NodeId> best;
    for (NodeId n = 0; n < graph.node_count(); ++n) {
      if (dist[n] > probe) continue;
      if (!best || dist[n] < dist[*best]) best = n;  // ascending scan keeps the smallest id on ties
    }
    if (best) return {*best, probe, dist[*best]};
    if (probe >= policy.max_radius_m) break;
    radius *= policy.growth_factor;
  }
  throw NoNodeInRange("no road node within " + std::to_string(policy.max_radius_m) + " m");
}

NodePath shortest_path(const RoadGraph& graph, NodeId source, NodeId target) {
  if (source >= graph.node_count() || target >= graph.node_count()) {
    throw std::invalid_argument("shortest_path: unknown node");
  }
  if (graph.component(source) != graph.component(target)) throw Unreachable("nodes are in different components");

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(graph.node_count(), inf);
  std::vector<std::vector<NodeId>> path(graph.node_count());
  std::vector<bool> settled(graph.node_count(), false);
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;

  dist[source] = 0.0;
  path[source] = {source};
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (settled[u] || d > dist[u]) continue;
    settled[u] = true;
    if (u == target) break;
    for (const Edge& e : graph.neighbours(u)) {
      if (settled[e.to]) continue;
      const double nd = d + e.length_m;
      if (nd < dist[e.to]) {
        dist[e.to] = nd;
        path[e.to] = path[u];
        path[e.to].push_back(e.to);
        queue.emplace(nd, e.to);
      } else if (nd == dist[e.to]) {
        auto candidate = path[u];
        candidate.push_back(e.to);
        if (candidate < path[e.to]) path[e.to] = std::move(candidate);
      }
    }
  }
  return {std::move(path[target]), dist[target]};
}

Route plan_route(const GeoPoint& from, const GeoPoint& to, const RoadGraph& graph, const SearchPolicy& policy) {
  Route route;
  if (from == to) {
    route.waypoints = {from};
    return route;
  }
  const SnapResult a = snap_to_graph(from, graph, policy);
  const SnapResult b = snap_to_graph(to, graph, policy);
  NodePath np = shortest_path(graph, a.node, b.node);
  route.waypoints.reserve(np.nodes.size() + 2);
  route.waypoints.push_back(from);
  for (NodeId n : np.nodes) route.waypoints.push_back(graph.position(n));
  route.waypoints.push_back(to);
  route.length_m = a.distance_m + np.cost_m + b.distance_m;
  route.node_path = std::move(np.nodes);
  return route;
}

SpawnHelper::SpawnHelper(const RoadGraph& graph, std::uint64_t seed) : nodes_(graph.positions()), rng_(seed) {}

NodeId SpawnHelper::random_node() {
  if (nodes_.empty()) throw std::logic_error("SpawnHelper: empty graph");
  std::uniform_int_distribution<std::size_t> pick(0, nodes_.size() - 1);
  return static_cast<NodeId>(pick(rng_));
}

GeoPoint SpawnHelper::random_point(double jitter_m) {
  const GeoPoint base = nodes_.at(random_node());
  if (jitter_m <= 0.0) return base;
  std::uniform_real_distribution<double> bearing(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> dist(0.0, jitter_m);
  const double b = bearing(rng_);
  return geo::destination_point(base, b, dist(rng_));
}

RoadGraph make_grid_graph(int n, double spacing_m, const GeoPoint& anchor) {
  if (n < 1) throw std::invalid_argument("grid size must be >= 1");
  if (!(spacing_m > 0.0)) throw std::invalid_argument("grid spacing must be > 0");
  constexpr double kRadToDeg = 180.0 / std::numbers::pi;
  const double half = (n - 1) / 2.0;
  const double cos_lat = std::cos(anchor.latitude_deg / kRadToDeg);
  RoadGraph g;
  for (int row = 0; row < n; ++row) {
    for (int col = 0; col < n; ++col) {
      const double north = (row - half) * spacing_m;
      const double east = (col - half) * spacing_m;
      g.add_node(geo::make_point(anchor.latitude_deg + north / geo::kEarthRadiusM * kRadToDeg,
                                 anchor.longitude_deg + east / (geo::kEarthRadiusM * cos_lat) * kRadToDeg));
    }
  }
  for (int row = 0; row < n; ++row) {
    for (int col = 0; col < n; ++col) {
      const auto id = static_cast<NodeId>(row * n + col);
      if (col + 1 < n) g.add_edge(id, id + 1);
      if (row + 1 < n) g.add_edge(id, static_cast<NodeId>(id + n));
    }
  }
  return g;
}

GridWorld make_grid_world(int n, double spacing_m, std::uint64_t seed, const GeoPoint& anchor) {
  RoadGraph g = make_grid_graph(n, spacing_m, anchor);
  SpawnHelper spawner(g, seed);
  return {std::move(g), std::move(spawner)};
}

}  // namespace robotaxi::sim
