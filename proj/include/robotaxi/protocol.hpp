#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "robotaxi/geo.hpp"

namespace robotaxi::protocol {

using geo::GeoPoint;

// Forward-only: EnRouteToPickup -> Occupied -> {Completed | Aborted}.
// Completed and Aborted only appear on the final update of a session.
enum class RidePhase { EnRouteToPickup, Occupied, Completed, Aborted };

std::string_view to_string(RidePhase phase) noexcept;
std::optional<RidePhase> ride_phase_from_string(std::string_view s) noexcept;
bool is_terminal(RidePhase phase) noexcept;

/// Customer -> server. {"ID","Type":"Customer","Origin"}
struct CustomerLocation {
  std::string id;
  GeoPoint origin;
  friend bool operator==(const CustomerLocation&, const CustomerLocation&) = default;
};

/// Customer -> server. {"ID","Type":"Request","Destination"}
struct RideRequest {
  std::string id;
  GeoPoint destination;
  friend bool operator==(const RideRequest&, const RideRequest&) = default;
};

/// Driver -> server. {"ID","Type":"Driver","Location"[,"Available"]}
/// Without Available it is a location-only heartbeat.
struct DriverLocation {
  std::string id;
  GeoPoint location;
  std::optional<bool> available;
  friend bool operator==(const DriverLocation&, const DriverLocation&) = default;
};

/// Server -> driver. {"Customer","Origin","Destination"}; carries no Type key.
struct DispatchOffer {
  std::string customer;
  GeoPoint origin;
  GeoPoint destination;
  friend bool operator==(const DispatchOffer&, const DispatchOffer&) = default;
};

/// Driver -> server. {"ID","Type":"Decision","Customer","Accept"}
struct DispatchDecision {
  std::string id;
  std::string customer;
  bool accept = false;
  friend bool operator==(const DispatchDecision&, const DispatchDecision&) = default;
};

/// Server -> both parties of a session, once per tick.
/// {"Type":"Relay","Counterpart","Location","Distance","Phase"}
struct RelayUpdate {
  std::string counterpart_id;
  GeoPoint location;
  double distance_m = 0.0;
  RidePhase phase = RidePhase::EnRouteToPickup;
  friend bool operator==(const RelayUpdate&, const RelayUpdate&) = default;
};

/// Server -> customer. {"Type":"BookingReply","Accepted"[,"Driver"][,"Reason"]}
struct BookingReply {
  bool accepted = false;
  std::optional<std::string> driver_id;
  std::optional<std::string> reason;
  friend bool operator==(const BookingReply&, const BookingReply&) = default;
};

enum class EntityKind { Customer, Driver };

struct MonitorEntity {
  std::string id;
  EntityKind kind = EntityKind::Driver;
  GeoPoint location;
  bool available = false;
  friend bool operator==(const MonitorEntity&, const MonitorEntity&) = default;
};

/// Server -> ops monitor. {"Type":"Monitor","Customers","Drivers","Pickups","Entities"}
struct MonitorSnapshot {
  std::uint64_t customers = 0;
  std::uint64_t drivers = 0;
  std::uint64_t pickups = 0;
  std::vector<MonitorEntity> entities;
  friend bool operator==(const MonitorSnapshot&, const MonitorSnapshot&) = default;
};

/// Monitor -> server. {"Type":"Subscribe"}
struct MonitorSubscribe {
  friend bool operator==(const MonitorSubscribe&, const MonitorSubscribe&) = default;
};

/// Server -> client acknowledgment, only under the benchmark flag. {"Ack":"Driver"}
struct Ack {
  std::string kind;
  friend bool operator==(const Ack&, const Ack&) = default;
};

/// Server -> client. {"Error":"<code>"}
struct ErrorReply {
  std::string code;
  friend bool operator==(const ErrorReply&, const ErrorReply&) = default;
};

using Message = std::variant<CustomerLocation, RideRequest, DriverLocation, DispatchOffer,
                             DispatchDecision, RelayUpdate, BookingReply, MonitorSnapshot,
                             MonitorSubscribe, Ack, ErrorReply>;

/// Name of the active alternative, e.g. "CustomerLocation".
std::string_view variant_name(const Message& m) noexcept;

enum class DecodeErrc { MalformedJson, UnknownType, MissingField, MalformedCoordinate };

std::string_view to_string(DecodeErrc code) noexcept;

/// Wire code used in {"Error":...} replies, e.g. "malformed_json".
std::string_view error_code(DecodeErrc code) noexcept;

class DecodeError : public std::runtime_error {
 public:
  DecodeError(DecodeErrc code, std::string field, const std::string& what);

  DecodeErrc code() const noexcept { return code_; }
  /// Offending field for MissingField / MalformedCoordinate, else empty.
  const std::string& field() const noexcept { return field_; }

 private:
  DecodeErrc code_;
  std::string field_;
};

/// Decodes one JSON object. Throws DecodeError and nothing else.
Message decode(std::string_view text);

/// Canonical JSON: keys in schema order, coordinates at six decimals, no whitespace.
std::string encode(const Message& m);

}  // namespace robotaxi::protocol
