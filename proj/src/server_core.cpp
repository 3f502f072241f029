#include "robotaxi/server_core.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

namespace robotaxi::gateway {

using namespace robotaxi::protocol;

std::string_view to_string(PeerKind kind) noexcept {
  switch (kind) {
    case PeerKind::Unknown: return "Unknown";
    case PeerKind::Customer: return "Customer";
    case PeerKind::Driver: return "Driver";
    case PeerKind::Monitor: return "Monitor";
  }
  return "Unknown";
}

Connection::Connection(ServerCore& core, StreamHandle stream) : core_(core), stream_(std::move(stream)) {}

void Connection::on_text(std::string_view frame) {
  {
    std::lock_guard lock(mu_);
    if (closed_) return;
  }
  core_.frames_received_.fetch_add(1, std::memory_order_relaxed);
  Message msg;
  try {
    msg = decode(frame);
  } catch (const DecodeError& e) {
    core_.send_error(*this, error_code(e.code()));
    return;
  }
  core_.route(*this, msg);
}

void Connection::on_close() {
  {
    std::lock_guard lock(mu_);
    if (closed_) return;
    closed_ = true;
  }
  core_.handle_close(*this);
}

PeerKind Connection::kind() const {
  std::lock_guard lock(mu_);
  return kind_;
}

std::optional<std::string> Connection::bound_id() const {
  std::lock_guard lock(mu_);
  return id_;
}

ServerCore::ServerCore(Scheduler& scheduler, ServerOptions options, EventLog* log)
    : scheduler_(scheduler),
      options_(options),
      log_(log),
      registry_(log, [&scheduler] { return static_cast<std::int64_t>(scheduler.now().count()); }),
      engine_(registry_, scheduler, options.dispatch, log) {}

ServerCore::~ServerCore() {
  std::lock_guard lock(mu_);
  if (monitor_timer_) scheduler_.cancel(*monitor_timer_);
}

std::shared_ptr<Connection> ServerCore::open(StreamHandle outbound) {
  connections_opened_.fetch_add(1, std::memory_order_relaxed);
  return std::make_shared<Connection>(*this, std::move(outbound));
}

void ServerCore::send_error(Connection& conn, std::string_view code) {
  errors_sent_.fetch_add(1, std::memory_order_relaxed);
  conn.stream_->send(ErrorReply{std::string(code)});
}

bool ServerCore::bind(Connection& conn, PeerKind kind, const std::string& id) {
  std::string_view error;
  bool newly_bound_driver = false;
  {
    std::lock_guard lock(conn.mu_);
    if (conn.kind_ == PeerKind::Unknown) {
      conn.kind_ = kind;
      conn.id_ = id;
      newly_bound_driver = kind == PeerKind::Driver;
    } else if (conn.kind_ != kind) {
      error = "protocol_violation";
    } else if (conn.id_ != id) {
      error = "identity_mismatch";
    }
  }
  if (!error.empty()) {
    send_error(conn, error);
    return false;
  }
  if (newly_bound_driver) drivers_registered_.fetch_add(1, std::memory_order_relaxed);
  return true;
}

void ServerCore::route(Connection& conn, const Message& msg) {
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, CustomerLocation>) {
          if (!bind(conn, PeerKind::Customer, m.id)) return;
          registry_.upsert_customer(m.id, m.origin, conn.stream_);
          if (options_.ack) conn.stream_->send(Ack{"Customer"});
        } else if constexpr (std::is_same_v<T, RideRequest>) {
          const auto kind = conn.kind();
          const auto id = conn.bound_id();
          if (kind == PeerKind::Customer && id != m.id) {
            send_error(conn, "identity_mismatch");
            return;
          }
          if (kind != PeerKind::Customer || !registry_.find_customer(m.id)) {
            send_error(conn, kind == PeerKind::Unknown || kind == PeerKind::Customer ? "unregistered"
                                                                                      : "protocol_violation");
            return;
          }
          if (engine_.customer_busy(m.id)) {
            conn.stream_->send(BookingReply{false, std::nullopt, "already_booked"});
            return;
          }
          registry_.set_destination(m.id, m.destination);
          engine_.handle_booking(m.id);
        } else if constexpr (std::is_same_v<T, DriverLocation>) {
          if (!bind(conn, PeerKind::Driver, m.id)) return;
          registry_.upsert_driver(m.id, m.location, m.available, conn.stream_);
          engine_.on_driver_location(m.id);
          if (options_.ack) conn.stream_->send(Ack{"Driver"});
        } else if constexpr (std::is_same_v<T, DispatchDecision>) {
          const auto kind = conn.kind();
          if (kind != PeerKind::Driver) {
            send_error(conn, kind == PeerKind::Unknown ? "unregistered" : "protocol_violation");
            return;
          }
          if (conn.bound_id() != m.id) {
            send_error(conn, "identity_mismatch");
            return;
          }
          engine_.on_decision(m);
        } else if constexpr (std::is_same_v<T, MonitorSubscribe>) {
          if (!options_.monitor) {
            send_error(conn, "monitor_disabled");
            return;
          }
          bool is_monitor = false;
          {
            std::lock_guard lock(conn.mu_);
            if (conn.kind_ == PeerKind::Unknown) conn.kind_ = PeerKind::Monitor;
            is_monitor = conn.kind_ == PeerKind::Monitor;
          }
          if (!is_monitor) {
            send_error(conn, "protocol_violation");
            return;
          }
          conn.stream_->send(snapshot());
          std::lock_guard lock(mu_);
          monitors_.push_back(conn.weak_from_this());
          if (!monitor_timer_ && !shut_down_) {
            monitor_timer_ = scheduler_.schedule_after(options_.monitor_period, [this] { monitor_tick(); });
          }
        } else {
          // Server-originated frames are never valid input.
          send_error(conn, "protocol_violation");
        }
      },
      msg);
}

void ServerCore::handle_close(Connection& conn) {
  connections_closed_.fetch_add(1, std::memory_order_relaxed);
  const auto kind = conn.kind();
  const auto id = conn.bound_id();
  if (!id) return;
  if (kind == PeerKind::Customer) {
    if (registry_.remove_on_disconnect(*id, registry::PeerKind::Customer, conn.stream_.get())) {
      engine_.on_disconnect(*id, registry::PeerKind::Customer);
    }
  } else if (kind == PeerKind::Driver) {
    drivers_disconnected_.fetch_add(1, std::memory_order_relaxed);
    if (registry_.remove_on_disconnect(*id, registry::PeerKind::Driver, conn.stream_.get())) {
      engine_.on_disconnect(*id, registry::PeerKind::Driver);
    }
  }
}

MonitorSnapshot ServerCore::snapshot() const {
  MonitorSnapshot snap;
  const auto counters = registry_.counters();
  snap.customers = counters.customers;
  snap.drivers = counters.drivers;
  snap.pickups = counters.pickups;
  for (const auto& c : registry_.customers()) {
    snap.entities.push_back({c.id, EntityKind::Customer, c.origin, !c.destination.has_value()});
  }
  for (const auto& d : registry_.drivers()) {
    snap.entities.push_back({d.id, EntityKind::Driver, d.curr_location, d.is_available});
  }
  return snap;
}

void ServerCore::monitor_tick() {
  std::vector<std::shared_ptr<Connection>> live;
  {
    std::lock_guard lock(mu_);
    monitor_timer_.reset();
    std::erase_if(monitors_, [&](const std::weak_ptr<Connection>& w) {
      auto c = w.lock();
      if (!c || !c->stream_->is_open()) return true;
      live.push_back(std::move(c));
      return false;
    });
    if (!live.empty() && !shut_down_) {
      monitor_timer_ = scheduler_.schedule_after(options_.monitor_period, [this] { monitor_tick(); });
    }
  }
  if (live.empty()) return;
  const auto snap = snapshot();
  for (auto& c : live) c->stream_->send(snap);
}

GatewayStats ServerCore::stats() const {
  GatewayStats s;
  s.connections_opened = connections_opened_.load();
  s.connections_closed = connections_closed_.load();
  s.frames_received = frames_received_.load();
  s.errors_sent = errors_sent_.load();
  s.drivers_registered = drivers_registered_.load();
  s.drivers_disconnected = drivers_disconnected_.load();
  return s;
}

void ServerCore::terminate_sessions() {
  {
    std::lock_guard lock(mu_);
    if (shut_down_) return;
    shut_down_ = true;
    if (monitor_timer_) scheduler_.cancel(*monitor_timer_);
    monitor_timer_.reset();
  }
  engine_.shutdown();
}

void ServerCore::shutdown() {
  terminate_sessions();
  {
    std::lock_guard lock(mu_);
    if (final_logged_) return;
    final_logged_ = true;
  }
  if (log_ != nullptr) {
    nlohmann::ordered_json line;
    line["ts_ms"] = scheduler_.now().count();
    line["op"] = "shutdown";
    const auto c = registry_.counters();
    line["customers"] = c.customers;
    line["drivers"] = c.drivers;
    line["pickups"] = c.pickups;
    log_->append(line.dump());
    log_->flush();
  }
}

}  // namespace robotaxi::gateway
