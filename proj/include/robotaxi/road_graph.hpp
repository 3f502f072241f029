#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "robotaxi/geo.hpp"

namespace robotaxi::sim {

using geo::GeoPoint;
using NodeId = std::uint32_t;

class NoNodeInRange : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Unreachable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Edge {
  NodeId to = 0;
  double length_m = 0.0;
};

/// Undirected road graph. Edge weights are haversine lengths in meters.
class RoadGraph {
 public:
  NodeId add_node(const GeoPoint& p);
  /// Throws std::invalid_argument on self-loops, unknown nodes, duplicate
  /// edges or zero-length edges.
  void add_edge(NodeId a, NodeId b);

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edge_count_; }
  bool empty() const { return nodes_.empty(); }
  const GeoPoint& position(NodeId n) const { return nodes_.at(n); }
  const std::vector<GeoPoint>& positions() const { return nodes_; }
  /// Neighbours sorted by node id.
  const std::vector<Edge>& neighbours(NodeId n) const { return adjacency_.at(n); }
  /// Connected-component label, kept current on every mutation.
  std::uint32_t component(NodeId n) const { return component_.at(n); }

 private:
  void relabel_components();

  std::vector<GeoPoint> nodes_;
  std::vector<std::vector<Edge>> adjacency_;
  std::vector<std::uint32_t> component_;
  std::size_t edge_count_ = 0;
};

/// Expanding-radius node search parameters.
struct SearchPolicy {
  double initial_radius_m = 10.0;
  double growth_factor = 2.0;
  double max_radius_m = 5000.0;
};

void validate(const SearchPolicy& policy);

struct SnapResult {
  NodeId node = 0;
  double radius_m = 0.0;   // the probe radius that first contained a node
  double distance_m = 0.0;
};

/// Probes radii r0, r0*g, r0*g^2, ... (the last probe clamped to the max)
/// and returns the nearest node inside the first non-empty ball, ties going
/// to the smallest node id. Throws NoNodeInRange past max_radius_m.
SnapResult snap_to_graph(const GeoPoint& p, const RoadGraph& graph, const SearchPolicy& policy = {});

struct Route {
  /// from, snapped path nodes..., to. A single point when from == to.
  std::vector<GeoPoint> waypoints;
  std::vector<NodeId> node_path;
  double length_m = 0.0;
};

/// Least-cost path between the nodes snapped from `from` and `to`, with the
/// off-graph legs prepended and appended. Equal-cost paths resolve to the
/// lexicographically smallest node sequence. Throws NoNodeInRange or
/// Unreachable.
Route plan_route(const GeoPoint& from, const GeoPoint& to, const RoadGraph& graph,
                 const SearchPolicy& policy = {});

/// Graph part only: cost and node sequence between two nodes.
struct NodePath {
  std::vector<NodeId> nodes;
  double cost_m = 0.0;
};
NodePath shortest_path(const RoadGraph& graph, NodeId source, NodeId target);

/// Seeded random picks over a grid world.
class SpawnHelper {
 public:
  SpawnHelper(const RoadGraph& graph, std::uint64_t seed);

  NodeId random_node();
  /// A point within `jitter_m` of a random node.
  GeoPoint random_point(double jitter_m = 0.0);

 private:
  std::vector<GeoPoint> nodes_;
  std::mt19937_64 rng_;
};

inline const GeoPoint kDefaultAnchor{35.228683, 126.844866};

/// n x n lattice with `spacing_m` between neighbours, centred on `anchor`.
/// Node id = row * n + col, row 0 at the south edge.
RoadGraph make_grid_graph(int n, double spacing_m, const GeoPoint& anchor = kDefaultAnchor);

struct GridWorld {
  RoadGraph graph;
  SpawnHelper spawner;
};

GridWorld make_grid_world(int n, double spacing_m, std::uint64_t seed, const GeoPoint& anchor = kDefaultAnchor);

}  // namespace robotaxi::sim
