#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "robotaxi/event_log.hpp"
#include "robotaxi/protocol.hpp"
#include "robotaxi/road_graph.hpp"
#include "robotaxi/scenario.hpp"
#include "robotaxi/scheduler.hpp"
#include "robotaxi/sim_links.hpp"

namespace robotaxi::sim {

enum class AvStatus { Idle, ToPickup, ToDestination };
enum class CustomerStatus { Waiting, Requesting, Matched, Riding, Done, Rejected, Aborted };

std::string_view to_string(AvStatus s) noexcept;
std::string_view to_string(CustomerStatus s) noexcept;

struct AvAgent {
  std::string driver_id;
  GeoPoint position;
  double speed_mps = 10.0;
  /// Remaining waypoints, next one first.
  std::vector<GeoPoint> route;
  AvStatus status = AvStatus::Idle;
  std::optional<protocol::DispatchOffer> job;
  double odometer_m = 0.0;
  bool registered = false;
  std::unique_ptr<ClientLink> link;
};

struct CustomerAgent {
  CustomerScript script;
  CustomerStatus status = CustomerStatus::Waiting;
  std::optional<std::string> driver_id;
  std::optional<std::string> reject_reason;
  std::unique_ptr<ClientLink> link;
};

enum class Pacing { Fast, RealTime };

struct SimConfig {
  double dt_s = 1.0;
  SearchPolicy search;
  double max_sim_time_s = 3600.0;
  Pacing pacing = Pacing::Fast;
  /// Network links only: how long to wait for outstanding replies per step.
  Millis reply_timeout{10'000};
  /// Count {"Ack":...} frames as replies to location messages (server --ack).
  bool await_acks = false;
};

struct SimSummary {
  std::size_t pickups = 0;
  std::size_t rejections = 0;
  std::size_t aborted = 0;
  double sim_duration_s = 0.0;
  bool completed = false;  // false when max_sim_time_s was hit
};

/// Deterministic simulated city. AVs drive the road graph, customers wait at
/// their origin; every agent talks to the server through its own link.
///
/// Event log lines: {"sim_t","actor","dir","message"}. Sent frames are all
/// logged; received frames are logged for offers, booking replies, errors and
/// the final relay update of a session.
class SimWorld {
 public:
  /// `advance_clock`, when set, is called with the new simulated time before
  /// inbound frames are processed (drives a ManualScheduler in fast mode).
  SimWorld(RoadGraph graph, const std::vector<AvSpec>& avs, std::vector<CustomerScript> customers,
           LinkFactory& links, SimConfig config = {}, EventLog* log = nullptr,
           std::function<void(Millis)> advance_clock = {});
  ~SimWorld();

  SimWorld(const SimWorld&) = delete;
  SimWorld& operator=(const SimWorld&) = delete;

  /// Connects all agents, registers AVs and issues requests due at t = 0.
  void start();
  /// Advances the world by dt seconds (dt > 0).
  void step(double dt_s);
  bool finished() const;
  double sim_time() const { return static_cast<double>(sim_ms_.count()) / 1000.0; }

  /// Steps until finished or max_sim_time_s, honoring the pacing mode.
  SimSummary run();
  SimSummary summary() const;

  const std::vector<AvAgent>& avs() const { return avs_; }
  const std::vector<CustomerAgent>& customers() const { return customers_; }
  const RoadGraph& graph() const { return graph_; }
  /// (customer, driver) pairs in the order bookings were accepted.
  const std::vector<std::pair<std::string, std::string>>& assignments() const { return assignments_; }

  /// Observer for every inbound frame (used by cadence measurements).
  using InboundObserver = std::function<void(const std::string& actor, const Inbound&)>;
  void set_inbound_observer(InboundObserver obs) { observer_ = std::move(obs); }

  /// Closes every link (agents disconnect).
  void disconnect_all();

 private:
  void send(ClientLink& link, const std::string& actor, const protocol::Message& m);
  void log_event(const std::string& actor, std::string_view dir, const protocol::Message& m);
  /// Drains every link until no frame is left and no reply is outstanding.
  void settle();
  bool deliver_all();
  void handle_av(AvAgent& av, const protocol::Message& m);
  void handle_customer(CustomerAgent& c, const protocol::Message& m);
  void issue_due_requests();
  void move_avs(double dt_s, std::vector<std::size_t>& arrived);
  void heartbeat_av(AvAgent& av);
  void heartbeat_customer(CustomerAgent& c);

  RoadGraph graph_;
  std::vector<AvAgent> avs_;
  std::vector<CustomerAgent> customers_;
  LinkFactory& links_;
  SimConfig config_;
  EventLog* log_;
  std::function<void(Millis)> advance_clock_;
  InboundObserver observer_;

  Millis sim_ms_{0};
  bool started_ = false;
  std::size_t outstanding_replies_ = 0;
  std::vector<std::pair<std::string, std::string>> assignments_;
};

/// Builds the scenario's grid world.
RoadGraph build_graph(const Scenario& scenario);

}  // namespace robotaxi::sim
