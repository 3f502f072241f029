#include "robotaxi/dispatch.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>
#include <spdlog/spdlog.h>

namespace robotaxi::dispatch {
namespace {

double round_cm(double meters) { return std::round(meters * 100.0) / 100.0; }

}  // namespace

void validate(const DispatchConfig& config) {
  if (config.offer_timeout <= Millis{0}) throw std::invalid_argument("offer_timeout must be > 0");
  if (config.max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
  if (config.tick_period <= Millis{0}) throw std::invalid_argument("tick_period must be > 0");
  if (!(config.arrival.pickup_radius_m > 0.0)) throw std::invalid_argument("pickup_radius_m must be > 0");
  if (!(config.arrival.dropoff_radius_m > 0.0)) throw std::invalid_argument("dropoff_radius_m must be > 0");
}

std::optional<std::string> match(const GeoPoint& origin, std::span<const registry::DriverRecord> candidates,
                                 MatchStrategy strategy) {
  switch (strategy) {
    case MatchStrategy::NearestAvailable: break;
  }
  NearestSelector selector(origin);
  for (const auto& c : candidates) {
    if (c.is_available) selector.offer(c.id, c.curr_location);
  }
  return selector.best();
}

ArrivalEvent check_arrival(const RelaySession& session, const GeoPoint& driver_location,
                           const ArrivalPolicy& policy) {
  switch (session.phase) {
    case RidePhase::EnRouteToPickup:
      if (geo::haversine_distance(driver_location, session.origin) <= policy.pickup_radius_m) {
        return ArrivalEvent::PickedUp;
      }
      return ArrivalEvent::None;
    case RidePhase::Occupied:
      if (geo::haversine_distance(driver_location, session.destination) <= policy.dropoff_radius_m) {
        return ArrivalEvent::DroppedOff;
      }
      return ArrivalEvent::None;
    case RidePhase::Completed:
    case RidePhase::Aborted:
      return ArrivalEvent::None;
  }
  return ArrivalEvent::None;
}

DispatchEngine::DispatchEngine(registry::Registry& registry, Scheduler& scheduler, DispatchConfig config,
                               EventLog* log)
    : registry_(registry), scheduler_(scheduler), config_(config), log_(log) {
  validate(config_);
}

DispatchEngine::~DispatchEngine() {
  std::lock_guard lock(mu_);
  for (auto& [c, b] : pending_) scheduler_.cancel(b.timer);
  for (auto& [d, s] : sessions_) scheduler_.cancel(s.timer);
}

void DispatchEngine::log_locked(std::string_view op, const std::string& driver_id,
                                const std::string& customer_id, std::string_view detail) {
  if (log_ == nullptr) return;
  nlohmann::ordered_json line;
  line["ts_ms"] = scheduler_.now().count();
  line["op"] = op;
  line["driver"] = driver_id;
  line["customer"] = customer_id;
  if (!detail.empty()) line["detail"] = detail;
  log_->append(line.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace));
}

void DispatchEngine::send_to_customer_locked(const std::string& customer_id, const protocol::Message& m) {
  const auto rec = registry_.find_customer(customer_id);
  if (rec && rec->stream) rec->stream->send(m);
}

void DispatchEngine::send_to_driver_locked(const std::string& driver_id, const protocol::Message& m) {
  const auto rec = registry_.find_driver(driver_id);
  if (rec && rec->stream) rec->stream->send(m);
}

bool DispatchEngine::customer_busy(const std::string& customer_id) const {
  std::lock_guard lock(mu_);
  return pending_.contains(customer_id) || customer_to_driver_.contains(customer_id);
}

void DispatchEngine::handle_booking(const std::string& customer_id) {
  std::lock_guard lock(mu_);
  if (pending_.contains(customer_id) || customer_to_driver_.contains(customer_id)) {
    // The outstanding booking keeps its destination.
    send_to_customer_locked(customer_id, protocol::BookingReply{false, std::nullopt, "already_booked"});
    ++stats_.bookings_rejected;
    return;
  }
  const auto customer = registry_.find_customer(customer_id);
  if (!customer || !customer->destination) {
    reject_locked(customer_id, "no_request");
    return;
  }
  PendingBooking booking;
  booking.customer_id = customer_id;
  booking.origin = customer->origin;
  booking.destination = *customer->destination;
  booking.token = next_token_++;
  auto [it, inserted] = pending_.emplace(customer_id, std::move(booking));
  try_next_offer_locked(it->second);
}

void DispatchEngine::try_next_offer_locked(PendingBooking& booking) {
  for (;;) {
    if (booking.offers > config_.max_retries) {
      reject_locked(booking.customer_id, "retries_exhausted");
      return;
    }
    std::optional<std::string> chosen;
    switch (config_.strategy) {
      case MatchStrategy::NearestAvailable: {
        NearestSelector selector(booking.origin);
        const auto admit = [&](const std::string& id) {
          return !reserved_.contains(id) && !sessions_.contains(id) && !booking.tried.contains(id);
        };
        registry_.visit_available(
            [&](const registry::DriverRecord& d) { selector.offer(d.id, d.curr_location, admit); });
        chosen = selector.best();
        break;
      }
    }
    if (!chosen) {
      reject_locked(booking.customer_id, "no_driver");
      return;
    }
    const auto rec = registry_.find_driver(*chosen);
    booking.tried.insert(*chosen);
    ++booking.offers;
    ++stats_.offers_sent;
    const protocol::DispatchOffer offer{booking.customer_id, booking.origin, booking.destination};
    if (!rec || !rec->stream || !rec->stream->send(offer)) {
      ++stats_.offers_declined;
      continue;  // unreachable driver counts as a decline
    }
    reserved_[*chosen] = booking.customer_id;
    booking.current_driver = *chosen;
    booking.token = next_token_++;
    booking.timer = scheduler_.schedule_after(
        config_.offer_timeout,
        [this, customer = booking.customer_id, token = booking.token] { on_offer_timeout(customer, token); });
    log_locked("offer", *chosen, booking.customer_id);
    return;
  }
}

void DispatchEngine::reject_locked(std::string customer_id, std::string reason) {
  if (const auto it = pending_.find(customer_id); it != pending_.end()) {
    scheduler_.cancel(it->second.timer);
    if (it->second.current_driver) reserved_.erase(*it->second.current_driver);
    pending_.erase(it);
  }
  registry_.set_destination(customer_id, std::nullopt);
  log_locked("reject", "", customer_id, reason);
  send_to_customer_locked(customer_id, protocol::BookingReply{false, std::nullopt, std::move(reason)});
  ++stats_.bookings_rejected;
}

void DispatchEngine::on_offer_timeout(const std::string& customer_id, std::uint64_t token) {
  std::lock_guard lock(mu_);
  const auto it = pending_.find(customer_id);
  if (it == pending_.end() || it->second.token != token) return;
  PendingBooking& booking = it->second;
  if (booking.current_driver) {
    reserved_.erase(*booking.current_driver);
    log_locked("offer_timeout", *booking.current_driver, customer_id);
    booking.current_driver.reset();
  }
  ++stats_.offers_timed_out;
  try_next_offer_locked(booking);
}

bool DispatchEngine::on_decision(const protocol::DispatchDecision& decision) {
  std::lock_guard lock(mu_);
  const auto r = reserved_.find(decision.id);
  if (r == reserved_.end() || r->second != decision.customer) {
    spdlog::warn("decision from '{}' for '{}' has no pending offer; ignored", decision.id, decision.customer);
    return false;
  }
  const auto it = pending_.find(decision.customer);
  if (it == pending_.end()) {
    reserved_.erase(r);
    return false;
  }
  PendingBooking& booking = it->second;
  scheduler_.cancel(booking.timer);
  reserved_.erase(r);
  booking.current_driver.reset();
  if (decision.accept) {
    PendingBooking taken = std::move(booking);
    pending_.erase(it);
    accept_locked(std::move(taken), decision.id);
  } else {
    ++stats_.offers_declined;
    log_locked("decline", decision.id, decision.customer);
    try_next_offer_locked(booking);
  }
  return true;
}

void DispatchEngine::accept_locked(PendingBooking booking, const std::string& driver_id) {
  const auto customer = registry_.find_customer(booking.customer_id);
  if (!customer) {
    ++stats_.bookings_abandoned;
    return;  // driver was never marked unavailable
  }
  const auto driver = registry_.find_driver(driver_id);
  if (!driver) {
    // Driver vanished between offer and acceptance; keep searching.
    auto [it, inserted] = pending_.emplace(booking.customer_id, std::move(booking));
    try_next_offer_locked(it->second);
    return;
  }
  if (sessions_.contains(driver_id) || customer_to_driver_.contains(booking.customer_id)) {
    ++stats_.invariant_violations;
    spdlog::error("session uniqueness violated for driver '{}' / customer '{}'", driver_id, booking.customer_id);
    reject_locked(booking.customer_id, "internal_error");
    return;
  }
  registry_.set_availability(driver_id, false);

  LiveSession live;
  live.session.driver_id = driver_id;
  live.session.customer_id = booking.customer_id;
  live.session.origin = booking.origin;
  live.session.destination = booking.destination;
  live.session.tick_period = config_.tick_period;
  live.session.started_at = scheduler_.now();
  live.token = next_token_++;
  auto [it, inserted] = sessions_.emplace(driver_id, std::move(live));
  customer_to_driver_[booking.customer_id] = driver_id;
  ++stats_.bookings_accepted;
  log_locked("session_start", driver_id, booking.customer_id);

  send_to_customer_locked(booking.customer_id, protocol::BookingReply{true, driver_id, std::nullopt});
  if (!apply_arrival_locked(it->second, driver->curr_location)) schedule_tick_locked(it->second);
}

void DispatchEngine::schedule_tick_locked(LiveSession& live) {
  const Millis due = live.session.started_at +
                     live.session.tick_period * static_cast<std::int64_t>(live.session.ticks_sent + 1);
  const Millis delay = std::max(Millis{0}, due - scheduler_.now());
  live.timer = scheduler_.schedule_after(
      delay, [this, driver = live.session.driver_id, token = live.token] { relay_tick(driver, token); });
}

void DispatchEngine::relay_tick(const std::string& driver_id, std::uint64_t token) {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(driver_id);
  if (it == sessions_.end() || it->second.token != token) return;
  LiveSession& live = it->second;
  const auto customer = registry_.find_customer(live.session.customer_id);
  const auto driver = registry_.find_driver(driver_id);
  if (!customer || !driver) {
    end_session_locked(driver_id, !customer ? TerminationReason::CustomerDisconnected
                                            : TerminationReason::DriverDisconnected);
    return;
  }
  if (apply_arrival_locked(live, driver->curr_location)) return;

  const double distance = round_cm(geo::haversine_distance(driver->curr_location, customer->origin));
  ++live.session.ticks_sent;
  const bool customer_ok = customer->stream && customer->stream->send(
      protocol::RelayUpdate{driver_id, driver->curr_location, distance, live.session.phase});
  const bool driver_ok = driver->stream && driver->stream->send(
      protocol::RelayUpdate{customer->id, customer->origin, distance, live.session.phase});
  if (!customer_ok || !driver_ok) {
    end_session_locked(driver_id, !customer_ok ? TerminationReason::CustomerDisconnected
                                               : TerminationReason::DriverDisconnected);
    return;
  }
  schedule_tick_locked(live);
}

bool DispatchEngine::apply_arrival_locked(LiveSession& live, const GeoPoint& driver_location) {
  for (;;) {
    switch (check_arrival(live.session, driver_location, config_.arrival)) {
      case ArrivalEvent::None:
        return false;
      case ArrivalEvent::PickedUp:
        live.session.phase = RidePhase::Occupied;
        log_locked("pickup", live.session.driver_id, live.session.customer_id);
        continue;  // the origin may already be inside the drop-off radius
      case ArrivalEvent::DroppedOff:
        end_session_locked(live.session.driver_id, TerminationReason::Completed);
        return true;
    }
  }
}

void DispatchEngine::on_driver_location(const std::string& driver_id) {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(driver_id);
  if (it == sessions_.end()) return;
  const auto driver = registry_.find_driver(driver_id);
  if (!driver) return;
  apply_arrival_locked(it->second, driver->curr_location);
}

void DispatchEngine::end_session_locked(std::string driver_id, TerminationReason reason) {
  const auto it = sessions_.find(driver_id);
  if (it == sessions_.end()) return;
  LiveSession live = std::move(it->second);
  sessions_.erase(it);
  customer_to_driver_.erase(live.session.customer_id);
  scheduler_.cancel(live.timer);

  const auto customer = registry_.find_customer(live.session.customer_id);
  const auto driver = registry_.find_driver(driver_id);
  const RidePhase final_phase = reason == TerminationReason::Completed ? RidePhase::Completed : RidePhase::Aborted;
  const GeoPoint driver_at = driver ? driver->curr_location : live.session.origin;
  const GeoPoint customer_at = customer ? customer->origin : live.session.origin;
  const double distance = round_cm(geo::haversine_distance(driver_at, customer_at));

  if (reason == TerminationReason::Completed) {
    registry_.increment_pickups();
    ++stats_.sessions_completed;
  } else {
    ++stats_.sessions_aborted;
  }
  if (driver) registry_.set_availability(driver_id, true);
  if (customer) registry_.set_destination(customer->id, std::nullopt);

  if (customer && customer->stream) {
    customer->stream->send(protocol::RelayUpdate{driver_id, driver_at, distance, final_phase});
  }
  if (driver && driver->stream) {
    driver->stream->send(protocol::RelayUpdate{live.session.customer_id, customer_at, distance, final_phase});
  }
  static constexpr std::string_view kReasons[] = {"completed", "customer_disconnected", "driver_disconnected",
                                                  "shutdown"};
  log_locked("session_end", driver_id, live.session.customer_id, kReasons[static_cast<int>(reason)]);
}

bool DispatchEngine::terminate_session(const std::string& driver_id, TerminationReason reason) {
  std::lock_guard lock(mu_);
  if (!sessions_.contains(driver_id)) return false;
  end_session_locked(driver_id, reason);
  return true;
}

void DispatchEngine::on_disconnect(const std::string& id, registry::PeerKind kind) {
  std::lock_guard lock(mu_);
  if (kind == registry::PeerKind::Customer) {
    if (const auto it = pending_.find(id); it != pending_.end()) {
      scheduler_.cancel(it->second.timer);
      if (it->second.current_driver) reserved_.erase(*it->second.current_driver);
      log_locked("booking_abandoned", it->second.current_driver.value_or(""), id);
      pending_.erase(it);
      ++stats_.bookings_abandoned;
    }
    if (const auto it = customer_to_driver_.find(id); it != customer_to_driver_.end()) {
      end_session_locked(std::string(it->second), TerminationReason::CustomerDisconnected);
    }
    return;
  }
  if (const auto r = reserved_.find(id); r != reserved_.end()) {
    const std::string customer = r->second;
    reserved_.erase(r);
    const auto it = pending_.find(customer);
    if (it != pending_.end()) {
      scheduler_.cancel(it->second.timer);
      it->second.current_driver.reset();
      ++stats_.offers_declined;
      try_next_offer_locked(it->second);
    }
  }
  if (sessions_.contains(id)) end_session_locked(id, TerminationReason::DriverDisconnected);
}

void DispatchEngine::shutdown() {
  std::lock_guard lock(mu_);
  while (!pending_.empty()) {
    auto it = pending_.begin();
    scheduler_.cancel(it->second.timer);
    if (it->second.current_driver) reserved_.erase(*it->second.current_driver);
    pending_.erase(it);
  }
  while (!sessions_.empty()) end_session_locked(std::string(sessions_.begin()->first), TerminationReason::Shutdown);
}

std::optional<RelaySession> DispatchEngine::session_for_driver(const std::string& driver_id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(driver_id);
  if (it == sessions_.end()) return std::nullopt;
  return it->second.session;
}

std::optional<RelaySession> DispatchEngine::session_for_customer(const std::string& customer_id) const {
  std::lock_guard lock(mu_);
  const auto c = customer_to_driver_.find(customer_id);
  if (c == customer_to_driver_.end()) return std::nullopt;
  return sessions_.at(c->second).session;
}

std::vector<RelaySession> DispatchEngine::sessions() const {
  std::lock_guard lock(mu_);
  std::vector<RelaySession> out;
  for (const auto& [d, s] : sessions_) out.push_back(s.session);
  return out;
}

std::size_t DispatchEngine::pending_bookings() const {
  std::lock_guard lock(mu_);
  return pending_.size();
}

DispatchStats DispatchEngine::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

}  // namespace robotaxi::dispatch
