#include "robotaxi/simworld.hpp"

#include <cmath>
#include <thread>

#include <json.hpp>
#include <spdlog/spdlog.h>

namespace robotaxi::sim {

using namespace robotaxi::protocol;

std::string_view to_string(AvStatus s) noexcept {
  switch (s) {
    case AvStatus::Idle: return "Idle";
    case AvStatus::ToPickup: return "ToPickup";
    case AvStatus::ToDestination: return "ToDestination";
  }
  return "Idle";
}

std::string_view to_string(CustomerStatus s) noexcept {
  switch (s) {
    case CustomerStatus::Waiting: return "Waiting";
    case CustomerStatus::Requesting: return "Requesting";
    case CustomerStatus::Matched: return "Matched";
    case CustomerStatus::Riding: return "Riding";
    case CustomerStatus::Done: return "Done";
    case CustomerStatus::Rejected: return "Rejected";
    case CustomerStatus::Aborted: return "Aborted";
  }
  return "Waiting";
}

namespace {

bool is_final(CustomerStatus s) {
  return s == CustomerStatus::Done || s == CustomerStatus::Rejected || s == CustomerStatus::Aborted;
}

bool heartbeats(CustomerStatus s) {
  return s == CustomerStatus::Requesting || s == CustomerStatus::Matched || s == CustomerStatus::Riding;
}

}  // namespace

RoadGraph build_graph(const Scenario& scenario) {
  return make_grid_graph(scenario.grid.n, scenario.grid.spacing_m, scenario.grid.anchor);
}

SimWorld::SimWorld(RoadGraph graph, const std::vector<AvSpec>& avs, std::vector<CustomerScript> customers,
                   LinkFactory& links, SimConfig config, EventLog* log, std::function<void(Millis)> advance_clock)
    : graph_(std::move(graph)),
      links_(links),
      config_(config),
      log_(log),
      advance_clock_(std::move(advance_clock)) {
  if (!(config_.dt_s > 0.0)) throw std::invalid_argument("dt_s must be > 0");
  validate(config_.search);
  for (const auto& spec : avs) {
    AvAgent av;
    av.driver_id = spec.id;
    av.position = graph_.position(spec.start_node);
    av.speed_mps = spec.speed_mps;
    avs_.push_back(std::move(av));
  }
  for (auto& script : customers) {
    CustomerAgent c;
    c.script = std::move(script);
    customers_.push_back(std::move(c));
  }
}

SimWorld::~SimWorld() { disconnect_all(); }

void SimWorld::disconnect_all() {
  for (auto& av : avs_) {
    if (av.link) av.link->close();
  }
  for (auto& c : customers_) {
    if (c.link) c.link->close();
  }
}

void SimWorld::log_event(const std::string& actor, std::string_view dir, const Message& m) {
  if (log_ == nullptr) return;
  nlohmann::ordered_json line;
  line["sim_t"] = sim_time();
  line["actor"] = actor;
  line["dir"] = dir;
  line["message"] = nlohmann::ordered_json::parse(encode(m));
  log_->append(line.dump());
}

void SimWorld::send(ClientLink& link, const std::string& actor, const Message& m) {
  log_event(actor, "send", m);
  if (std::holds_alternative<RideRequest>(m)) ++outstanding_replies_;
  if (config_.await_acks &&
      (std::holds_alternative<DriverLocation>(m) || std::holds_alternative<CustomerLocation>(m))) {
    ++outstanding_replies_;
  }
  link.send(m);
}

void SimWorld::start() {
  if (started_) return;
  started_ = true;
  for (auto& av : avs_) av.link = links_.connect();
  for (auto& c : customers_) c.link = links_.connect();
  if (advance_clock_) advance_clock_(sim_ms_);
  for (auto& av : avs_) {
    send(*av.link, av.driver_id, DriverLocation{av.driver_id, av.position, true});
    av.registered = true;
  }
  settle();
  issue_due_requests();
}

bool SimWorld::deliver_all() {
  bool any = false;
  for (auto& av : avs_) {
    if (!av.link) continue;
    for (auto& in : av.link->drain()) {
      any = true;
      if (observer_) observer_(av.driver_id, in);
      handle_av(av, in.message);
    }
  }
  for (auto& c : customers_) {
    if (!c.link) continue;
    for (auto& in : c.link->drain()) {
      any = true;
      if (observer_) observer_(c.script.customer_id, in);
      handle_customer(c, in.message);
    }
  }
  return any;
}

void SimWorld::settle() {
  const auto deadline = std::chrono::steady_clock::now() + config_.reply_timeout;
  for (;;) {
    if (deliver_all()) continue;
    if (links_.synchronous()) return;
    if (outstanding_replies_ == 0) {
      // Frames fanned out to other connections may trail the last reply.
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
      if (!deliver_all()) return;
      continue;
    }
    if (std::chrono::steady_clock::now() > deadline) {
      spdlog::warn("sim: {} replies still outstanding after {} ms", outstanding_replies_,
                   config_.reply_timeout.count());
      outstanding_replies_ = 0;
      return;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
}

void SimWorld::handle_av(AvAgent& av, const Message& m) {
  if (const auto* offer = std::get_if<DispatchOffer>(&m)) {
    log_event(av.driver_id, "recv", m);
    bool accept = av.status == AvStatus::Idle && !av.job;
    Route route;
    if (accept) {
      try {
        route = plan_route(av.position, offer->origin, graph_, config_.search);
      } catch (const std::exception& e) {
        spdlog::info("sim: {} declines {}: {}", av.driver_id, offer->customer, e.what());
        accept = false;
      }
    }
    if (accept) {
      av.status = AvStatus::ToPickup;
      av.job = *offer;
      av.route.assign(route.waypoints.begin() + 1, route.waypoints.end());
      if (av.route.empty()) av.route.push_back(offer->origin);
    }
    send(*av.link, av.driver_id, DispatchDecision{av.driver_id, offer->customer, accept});
  } else if (const auto* relay = std::get_if<RelayUpdate>(&m)) {
    if (!is_terminal(relay->phase)) return;
    log_event(av.driver_id, "recv", m);
    av.status = AvStatus::Idle;
    av.route.clear();
    av.job.reset();
  } else if (std::holds_alternative<Ack>(m)) {
    if (outstanding_replies_ > 0) --outstanding_replies_;
  } else if (std::holds_alternative<ErrorReply>(m)) {
    log_event(av.driver_id, "recv", m);
    if (outstanding_replies_ > 0) --outstanding_replies_;
  }
}

void SimWorld::handle_customer(CustomerAgent& c, const Message& m) {
  if (const auto* reply = std::get_if<BookingReply>(&m)) {
    log_event(c.script.customer_id, "recv", m);
    if (outstanding_replies_ > 0) --outstanding_replies_;
    if (c.status != CustomerStatus::Requesting) return;
    if (reply->accepted) {
      c.status = CustomerStatus::Matched;
      c.driver_id = reply->driver_id;
      assignments_.emplace_back(c.script.customer_id, reply->driver_id.value_or(""));
    } else {
      c.status = CustomerStatus::Rejected;
      c.reject_reason = reply->reason;
    }
  } else if (const auto* relay = std::get_if<RelayUpdate>(&m)) {
    switch (relay->phase) {
      case RidePhase::EnRouteToPickup:
      case RidePhase::Occupied:
        // Boarding follows the car (see heartbeat_customer); tick timing is
        // transport dependent and must not steer the agents.
        break;
      case RidePhase::Completed:
        log_event(c.script.customer_id, "recv", m);
        c.status = CustomerStatus::Done;
        break;
      case RidePhase::Aborted:
        log_event(c.script.customer_id, "recv", m);
        c.status = CustomerStatus::Aborted;
        break;
    }
  } else if (std::holds_alternative<Ack>(m)) {
    if (outstanding_replies_ > 0) --outstanding_replies_;
  } else if (std::holds_alternative<ErrorReply>(m)) {
    log_event(c.script.customer_id, "recv", m);
    if (outstanding_replies_ > 0) --outstanding_replies_;
  }
}

void SimWorld::issue_due_requests() {
  for (auto& c : customers_) {
    if (c.status != CustomerStatus::Waiting) continue;
    if (static_cast<double>(sim_ms_.count()) < c.script.request_at_s * 1000.0) continue;
    c.status = CustomerStatus::Requesting;
    send(*c.link, c.script.customer_id, CustomerLocation{c.script.customer_id, c.script.origin});
    send(*c.link, c.script.customer_id, RideRequest{c.script.customer_id, c.script.destination});
    settle();
  }
}

void SimWorld::move_avs(double dt_s, std::vector<std::size_t>& arrived) {
  for (std::size_t i = 0; i < avs_.size(); ++i) {
    AvAgent& av = avs_[i];
    double budget = av.speed_mps * dt_s;
    while (budget > 0.0 && !av.route.empty()) {
      const GeoPoint next = av.route.front();
      const double leg = geo::haversine_distance(av.position, next);
      const GeoPoint moved = geo::move_toward(av.position, next, budget);
      if (moved == next) {
        av.odometer_m += leg;
        budget -= leg;
        av.position = next;
        av.route.erase(av.route.begin());
      } else {
        av.odometer_m += budget;
        budget = 0.0;
        av.position = moved;
      }
      if (!av.route.empty()) continue;

      // Stop at the pickup or drop-off point for this step.
      arrived.push_back(i);
      if (av.status == AvStatus::ToPickup && av.job) {
        av.status = AvStatus::ToDestination;
        try {
          const Route r = plan_route(av.job->origin, av.job->destination, graph_, config_.search);
          av.route.assign(r.waypoints.begin() + 1, r.waypoints.end());
        } catch (const std::exception& e) {
          spdlog::warn("sim: {} cannot route to destination ({}); driving straight", av.driver_id, e.what());
          av.route = {av.job->destination};
        }
        if (av.route.empty()) av.route.push_back(av.job->destination);
      } else {
        av.status = AvStatus::Idle;
        av.job.reset();
      }
      break;
    }
  }
}

void SimWorld::heartbeat_av(AvAgent& av) {
  if (!av.link) return;
  send(*av.link, av.driver_id, DriverLocation{av.driver_id, av.position, std::nullopt});
}

void SimWorld::heartbeat_customer(CustomerAgent& c) {
  if (!c.link || !heartbeats(c.status)) return;
  GeoPoint where = c.script.origin;
  if (c.driver_id) {
    for (const auto& av : avs_) {
      if (av.driver_id != *c.driver_id) continue;
      const bool aboard = av.status == AvStatus::ToDestination && av.job && av.job->customer == c.script.customer_id;
      if (c.status == CustomerStatus::Matched && aboard) c.status = CustomerStatus::Riding;
      // A riding customer is wherever the car is.
      if (c.status == CustomerStatus::Riding) where = av.position;
    }
  }
  send(*c.link, c.script.customer_id, CustomerLocation{c.script.customer_id, where});
}

void SimWorld::step(double dt_s) {
  if (!(dt_s > 0.0)) throw std::invalid_argument("step: dt must be > 0");
  if (!started_) start();
  const Millis before = sim_ms_;
  sim_ms_ += Millis{std::llround(dt_s * 1000.0)};
  if (advance_clock_) advance_clock_(sim_ms_);
  settle();

  std::vector<std::size_t> arrived;
  move_avs(dt_s, arrived);
  const bool whole_second = before.count() / 1000 != sim_ms_.count() / 1000;
  if (whole_second) {
    for (auto& av : avs_) heartbeat_av(av);
    for (auto& c : customers_) heartbeat_customer(c);
  } else {
    for (std::size_t i : arrived) heartbeat_av(avs_[i]);
  }
  settle();
  issue_due_requests();
}

bool SimWorld::finished() const {
  for (const auto& c : customers_) {
    if (!is_final(c.status)) return false;
  }
  for (const auto& av : avs_) {
    if (av.status != AvStatus::Idle) return false;
  }
  return true;
}

SimSummary SimWorld::run() {
  if (!started_) start();
  const auto wall_start = std::chrono::steady_clock::now();
  const auto step_ms = Millis{std::llround(config_.dt_s * 1000.0)};
  while (!finished() && sim_time() < config_.max_sim_time_s) {
    if (config_.pacing == Pacing::RealTime) std::this_thread::sleep_until(wall_start + sim_ms_ + step_ms);
    step(config_.dt_s);
  }
  return summary();
}

SimSummary SimWorld::summary() const {
  SimSummary s;
  for (const auto& c : customers_) {
    if (c.status == CustomerStatus::Done) ++s.pickups;
    if (c.status == CustomerStatus::Rejected) ++s.rejections;
    if (c.status == CustomerStatus::Aborted) ++s.aborted;
  }
  s.sim_duration_s = sim_time();
  s.completed = finished();
  return s;
}

}  // namespace robotaxi::sim
