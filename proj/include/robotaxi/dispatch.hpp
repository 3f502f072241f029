#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "robotaxi/event_log.hpp"
#include "robotaxi/geo.hpp"
#include "robotaxi/protocol.hpp"
#include "robotaxi/registry.hpp"
#include "robotaxi/scheduler.hpp"

namespace robotaxi::dispatch {

using geo::GeoPoint;
using protocol::RidePhase;

enum class MatchStrategy { NearestAvailable };

struct ArrivalPolicy {
  double pickup_radius_m = 5.0;
  double dropoff_radius_m = 5.0;
};

struct DispatchConfig {
  Millis offer_timeout{5000};
  /// Offers made after the first one before the booking is rejected.
  int max_retries = 3;
  Millis tick_period{1000};
  ArrivalPolicy arrival;
  MatchStrategy strategy = MatchStrategy::NearestAvailable;
};

/// Throws std::invalid_argument when a knob is out of range.
void validate(const DispatchConfig& config);

/// Running nearest-candidate choice shared by match() and the engine.
/// `admit` is consulted only for a candidate that would become the new best.
class NearestSelector {
 public:
  explicit NearestSelector(const GeoPoint& origin) : origin_(origin) {}

  template <typename Admit>
  void offer(const std::string& id, const GeoPoint& location, Admit&& admit) {
    const double d = geo::haversine_distance(location, origin_);
    if (best_ && (d > best_d_ || (d == best_d_ && !(id < *best_)))) return;
    if (!admit(id)) return;
    best_ = id;
    best_d_ = d;
  }
  void offer(const std::string& id, const GeoPoint& location) {
    offer(id, location, [](const std::string&) { return true; });
  }

  const std::optional<std::string>& best() const { return best_; }

 private:
  GeoPoint origin_;
  std::optional<std::string> best_;
  double best_d_ = 0.0;
};

/// Picks the available candidate nearest to `origin` (haversine), breaking
/// distance ties by the lexicographically smallest driver id. Unavailable
/// candidates are skipped. nullopt means no driver is available.
std::optional<std::string> match(const GeoPoint& origin, std::span<const registry::DriverRecord> candidates,
                                 MatchStrategy strategy = MatchStrategy::NearestAvailable);

/// Live state of one matched driver-customer pair.
struct RelaySession {
  std::string driver_id;
  std::string customer_id;
  GeoPoint origin;
  GeoPoint destination;
  RidePhase phase = RidePhase::EnRouteToPickup;
  Millis tick_period{1000};
  Millis started_at{0};
  std::uint64_t ticks_sent = 0;
};

enum class ArrivalEvent { None, PickedUp, DroppedOff };

/// Pure arrival rule: pickup inside pickup_radius_m of the origin while en
/// route, drop-off inside dropoff_radius_m of the destination while occupied.
ArrivalEvent check_arrival(const RelaySession& session, const GeoPoint& driver_location,
                           const ArrivalPolicy& policy);

enum class TerminationReason { Completed, CustomerDisconnected, DriverDisconnected, Shutdown };

struct DispatchStats {
  std::uint64_t bookings_accepted = 0;
  std::uint64_t bookings_rejected = 0;
  std::uint64_t offers_sent = 0;
  std::uint64_t offers_declined = 0;
  std::uint64_t offers_timed_out = 0;
  std::uint64_t sessions_completed = 0;
  std::uint64_t sessions_aborted = 0;
  std::uint64_t bookings_abandoned = 0;  // customer left during the handshake
  std::uint64_t invariant_violations = 0;
};

/// Matches ride requests to drivers, runs the offer/accept handshake and owns
/// every relay session until drop-off or disconnect.
///
/// All entry points are thread-safe. Outbound messages are written to the
/// streams stored in the registry; streams must not call back into the
/// engine synchronously.
class DispatchEngine {
 public:
  DispatchEngine(registry::Registry& registry, Scheduler& scheduler, DispatchConfig config = {},
                 EventLog* log = nullptr);
  ~DispatchEngine();

  DispatchEngine(const DispatchEngine&) = delete;
  DispatchEngine& operator=(const DispatchEngine&) = delete;

  /// Starts the handshake for a customer whose destination is already
  /// stored. The outcome arrives as a BookingReply on the customer's stream.
  void handle_booking(const std::string& customer_id);

  /// Returns false when no offer to that driver for that customer is pending.
  bool on_decision(const protocol::DispatchDecision& decision);

  /// Re-evaluates arrival for the driver's session after a location update.
  void on_driver_location(const std::string& driver_id);

  /// Call after the registry record is gone.
  void on_disconnect(const std::string& id, registry::PeerKind kind);

  bool terminate_session(const std::string& driver_id, TerminationReason reason);
  /// Terminates every session and abandons every pending handshake.
  void shutdown();

  /// True while the customer has a pending booking or a live session.
  bool customer_busy(const std::string& customer_id) const;

  std::optional<RelaySession> session_for_driver(const std::string& driver_id) const;
  std::optional<RelaySession> session_for_customer(const std::string& customer_id) const;
  std::vector<RelaySession> sessions() const;
  std::size_t pending_bookings() const;
  DispatchStats stats() const;
  const DispatchConfig& config() const { return config_; }

 private:
  struct PendingBooking {
    std::string customer_id;
    GeoPoint origin;
    GeoPoint destination;
    std::set<std::string> tried;
    int offers = 0;
    std::optional<std::string> current_driver;
    TimerId timer = 0;
    std::uint64_t token = 0;
  };
  struct LiveSession {
    RelaySession session;
    TimerId timer = 0;
    std::uint64_t token = 0;
  };

  void try_next_offer_locked(PendingBooking& booking);
  void reject_locked(std::string customer_id, std::string reason);
  void on_offer_timeout(const std::string& customer_id, std::uint64_t token);
  void accept_locked(PendingBooking booking, const std::string& driver_id);
  void relay_tick(const std::string& driver_id, std::uint64_t token);
  void schedule_tick_locked(LiveSession& live);
  /// Returns true when the session ended.
  bool apply_arrival_locked(LiveSession& live, const GeoPoint& driver_location);
  void end_session_locked(std::string driver_id, TerminationReason reason);
  void send_to_customer_locked(const std::string& customer_id, const protocol::Message& m);
  void send_to_driver_locked(const std::string& driver_id, const protocol::Message& m);
  void log_locked(std::string_view op, const std::string& driver_id, const std::string& customer_id,
                  std::string_view detail = {});

  registry::Registry& registry_;
  Scheduler& scheduler_;
  DispatchConfig config_;
  EventLog* log_;

  mutable std::mutex mu_;
  std::uint64_t next_token_ = 1;
  std::map<std::string, PendingBooking> pending_;    // by customer
  std::map<std::string, std::string> reserved_;      // driver -> customer with an open offer
  std::map<std::string, LiveSession> sessions_;      // by driver
  std::map<std::string, std::string> customer_to_driver_;
  DispatchStats stats_;
};

}  // namespace robotaxi::dispatch
