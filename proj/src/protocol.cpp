#include "robotaxi/protocol.hpp"

#include <cmath>

#include <json.hpp>

namespace robotaxi::protocol {
namespace {

using Json = nlohmann::ordered_json;

constexpr std::string_view kTypeCustomer = "Customer";
constexpr std::string_view kTypeRequest = "Request";
constexpr std::string_view kTypeDriver = "Driver";
constexpr std::string_view kTypeDecision = "Decision";
constexpr std::string_view kTypeRelay = "Relay";
constexpr std::string_view kTypeBookingReply = "BookingReply";
constexpr std::string_view kTypeMonitor = "Monitor";
constexpr std::string_view kTypeSubscribe = "Subscribe";

[[noreturn]] void missing(std::string_view field) {
  throw DecodeError(DecodeErrc::MissingField, std::string(field),
                    "missing or invalid field '" + std::string(field) + "'");
}

const Json& require(const Json& obj, std::string_view key) {
  const auto it = obj.find(key);
  if (it == obj.end()) missing(key);
  return *it;
}

std::string require_id(const Json& obj, std::string_view key) {
  const Json& v = require(obj, key);
  if (!v.is_string()) missing(key);
  auto s = v.get<std::string>();
  if (s.empty()) missing(key);
  return s;
}

std::optional<std::string> optional_string(const Json& obj, std::string_view key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) missing(key);
  return it->get<std::string>();
}

GeoPoint require_coord(const Json& obj, std::string_view key) {
  const Json& v = require(obj, key);
  if (!v.is_string()) {
    throw DecodeError(DecodeErrc::MalformedCoordinate, std::string(key),
                      "coordinate '" + std::string(key) + "' must be a string");
  }
  try {
    return geo::parse_coord_string(v.get_ref<const std::string&>());
  } catch (const geo::MalformedCoordinate& e) {
    throw DecodeError(DecodeErrc::MalformedCoordinate, std::string(key),
                      "coordinate '" + std::string(key) + "': " + e.what());
  }
}

bool require_bool(const Json& obj, std::string_view key) {
  const Json& v = require(obj, key);
  if (!v.is_boolean()) missing(key);
  return v.get<bool>();
}

// Accepts JSON booleans and the quoted forms "True"/"False".
std::optional<bool> optional_availability(const Json& obj, std::string_view key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (it->is_boolean()) return it->get<bool>();
  if (it->is_string()) {
    const auto& s = it->get_ref<const std::string&>();
    if (s == "True") return true;
    if (s == "False") return false;
  }
  missing(key);
}

std::uint64_t require_count(const Json& obj, std::string_view key) {
  const Json& v = require(obj, key);
  if (!v.is_number_unsigned()) missing(key);
  return v.get<std::uint64_t>();
}

Message decode_typed(const Json& obj, std::string_view type) {
  if (type == kTypeCustomer) {
    return CustomerLocation{require_id(obj, "ID"), require_coord(obj, "Origin")};
  }
  if (type == kTypeRequest) {
    return RideRequest{require_id(obj, "ID"), require_coord(obj, "Destination")};
  }
  if (type == kTypeDriver) {
    DriverLocation m{require_id(obj, "ID"), require_coord(obj, "Location"), std::nullopt};
    m.available = optional_availability(obj, "Available");
    return m;
  }
  if (type == kTypeDecision) {
    return DispatchDecision{require_id(obj, "ID"), require_id(obj, "Customer"),
                            require_bool(obj, "Accept")};
  }
  if (type == kTypeRelay) {
    RelayUpdate m;
    m.counterpart_id = require_id(obj, "Counterpart");
    m.location = require_coord(obj, "Location");
    const Json& d = require(obj, "Distance");
    if (!d.is_number()) missing("Distance");
    m.distance_m = d.get<double>();
    if (!std::isfinite(m.distance_m) || m.distance_m < 0.0) missing("Distance");
    const Json& p = require(obj, "Phase");
    if (!p.is_string()) missing("Phase");
    const auto phase = ride_phase_from_string(p.get_ref<const std::string&>());
    if (!phase) missing("Phase");
    m.phase = *phase;
    return m;
  }
  if (type == kTypeBookingReply) {
    BookingReply m;
    m.accepted = require_bool(obj, "Accepted");
    m.driver_id = optional_string(obj, "Driver");
    m.reason = optional_string(obj, "Reason");
    return m;
  }
  if (type == kTypeMonitor) {
    MonitorSnapshot m;
    m.customers = require_count(obj, "Customers");
    m.drivers = require_count(obj, "Drivers");
    m.pickups = require_count(obj, "Pickups");
    const Json& entities = require(obj, "Entities");
    if (!entities.is_array()) missing("Entities");
    m.entities.reserve(entities.size());
    for (const Json& e : entities) {
      if (!e.is_object()) missing("Entities");
      MonitorEntity entity;
      entity.id = require_id(e, "ID");
      const Json& kind = require(e, "Kind");
      if (!kind.is_string()) missing("Kind");
      if (kind.get_ref<const std::string&>() == kTypeCustomer) {
        entity.kind = EntityKind::Customer;
      } else if (kind.get_ref<const std::string&>() == kTypeDriver) {
        entity.kind = EntityKind::Driver;
      } else {
        missing("Kind");
      }
      entity.location = require_coord(e, "Location");
      entity.available = require_bool(e, "Available");
      m.entities.push_back(std::move(entity));
    }
    return m;
  }
  if (type == kTypeSubscribe) return MonitorSubscribe{};
  throw DecodeError(DecodeErrc::UnknownType, "Type", "unknown Type '" + std::string(type) + "'");
}

Message decode_object(const Json& obj) {
  const auto type_it = obj.find("Type");
  if (type_it != obj.end()) {
    if (!type_it->is_string()) throw DecodeError(DecodeErrc::UnknownType, "Type", "Type is not a string");
    return decode_typed(obj, type_it->get_ref<const std::string&>());
  }
  // Untyped server frames are recognized by their key shape.
  if (obj.contains("Ack")) {
    const Json& v = obj["Ack"];
    if (!v.is_string()) missing("Ack");
    return Ack{v.get<std::string>()};
  }
  if (obj.contains("Error")) {
    const Json& v = obj["Error"];
    if (!v.is_string()) missing("Error");
    return ErrorReply{v.get<std::string>()};
  }
  if (obj.contains("Customer")) {
    return DispatchOffer{require_id(obj, "Customer"), require_coord(obj, "Origin"),
                         require_coord(obj, "Destination")};
  }
  missing("Type");
}

struct Encoder {
  Json operator()(const CustomerLocation& m) const {
    Json j;
    j["ID"] = m.id;
    j["Type"] = kTypeCustomer;
    j["Origin"] = geo::render_coord_string(m.origin);
    return j;
  }
  Json operator()(const RideRequest& m) const {
    Json j;
    j["ID"] = m.id;
    j["Type"] = kTypeRequest;
    j["Destination"] = geo::render_coord_string(m.destination);
    return j;
  }
  Json operator()(const DriverLocation& m) const {
    Json j;
    j["ID"] = m.id;
    j["Type"] = kTypeDriver;
    j["Location"] = geo::render_coord_string(m.location);
    if (m.available) j["Available"] = *m.available;
    return j;
  }
  Json operator()(const DispatchOffer& m) const {
    Json j;
    j["Customer"] = m.customer;
    j["Origin"] = geo::render_coord_string(m.origin);
    j["Destination"] = geo::render_coord_string(m.destination);
    return j;
  }
  Json operator()(const DispatchDecision& m) const {
    Json j;
    j["ID"] = m.id;
    j["Type"] = kTypeDecision;
    j["Customer"] = m.customer;
    j["Accept"] = m.accept;
    return j;
  }
  Json operator()(const RelayUpdate& m) const {
    Json j;
    j["Type"] = kTypeRelay;
    j["Counterpart"] = m.counterpart_id;
    j["Location"] = geo::render_coord_string(m.location);
    j["Distance"] = m.distance_m;
    j["Phase"] = to_string(m.phase);
    return j;
  }
  Json operator()(const BookingReply& m) const {
    Json j;
    j["Type"] = kTypeBookingReply;
    j["Accepted"] = m.accepted;
    if (m.driver_id) j["Driver"] = *m.driver_id;
    if (m.reason) j["Reason"] = *m.reason;
    return j;
  }
  Json operator()(const MonitorSnapshot& m) const {
    Json j;
    j["Type"] = kTypeMonitor;
    j["Customers"] = m.customers;
    j["Drivers"] = m.drivers;
    j["Pickups"] = m.pickups;
    Json entities = Json::array();
    for (const auto& e : m.entities) {
      Json je;
      je["ID"] = e.id;
      je["Kind"] = e.kind == EntityKind::Customer ? kTypeCustomer : kTypeDriver;
      je["Location"] = geo::render_coord_string(e.location);
      je["Available"] = e.available;
      entities.push_back(std::move(je));
    }
    j["Entities"] = std::move(entities);
    return j;
  }
  Json operator()(const MonitorSubscribe&) const {
    Json j;
    j["Type"] = kTypeSubscribe;
    return j;
  }
  Json operator()(const Ack& m) const {
    Json j;
    j["Ack"] = m.kind;
    return j;
  }
  Json operator()(const ErrorReply& m) const {
    Json j;
    j["Error"] = m.code;
    return j;
  }
};

}  // namespace

std::string_view to_string(RidePhase phase) noexcept {
  switch (phase) {
    case RidePhase::EnRouteToPickup: return "EnRouteToPickup";
    case RidePhase::Occupied: return "Occupied";
    case RidePhase::Completed: return "Completed";
    case RidePhase::Aborted: return "Aborted";
  }
  return "EnRouteToPickup";
}

std::optional<RidePhase> ride_phase_from_string(std::string_view s) noexcept {
  for (auto p : {RidePhase::EnRouteToPickup, RidePhase::Occupied, RidePhase::Completed, RidePhase::Aborted}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

bool is_terminal(RidePhase phase) noexcept {
  return phase == RidePhase::Completed || phase == RidePhase::Aborted;
}

std::string_view variant_name(const Message& m) noexcept {
  static constexpr std::string_view kNames[] = {
      "CustomerLocation", "RideRequest",     "DriverLocation",   "DispatchOffer",
      "DispatchDecision", "RelayUpdate",     "BookingReply",     "MonitorSnapshot",
      "MonitorSubscribe", "Ack",             "ErrorReply"};
  static_assert(std::size(kNames) == std::variant_size_v<Message>);
  return kNames[m.index()];
}

std::string_view to_string(DecodeErrc code) noexcept {
  switch (code) {
    case DecodeErrc::MalformedJson: return "MalformedJson";
    case DecodeErrc::UnknownType: return "UnknownType";
    case DecodeErrc::MissingField: return "MissingField";
    case DecodeErrc::MalformedCoordinate: return "MalformedCoordinate";
  }
  return "MalformedJson";
}

std::string_view error_code(DecodeErrc code) noexcept {
  switch (code) {
    case DecodeErrc::MalformedJson: return "malformed_json";
    case DecodeErrc::UnknownType: return "unknown_type";
    case DecodeErrc::MissingField: return "missing_field";
    case DecodeErrc::MalformedCoordinate: return "malformed_coordinate";
  }
  return "malformed_json";
}

DecodeError::DecodeError(DecodeErrc code, std::string field, const std::string& what)
    : std::runtime_error(what), code_(code), field_(std::move(field)) {}

Message decode(std::string_view text) {
  Json obj = Json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (obj.is_discarded()) throw DecodeError(DecodeErrc::MalformedJson, {}, "invalid JSON");
  if (!obj.is_object()) throw DecodeError(DecodeErrc::MalformedJson, {}, "expected a JSON object");
  try {
    return decode_object(obj);
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(DecodeErrc::MalformedJson, {}, e.what());
  }
}

std::string encode(const Message& m) {
  return std::visit(Encoder{}, m).dump(-1, ' ', false, Json::error_handler_t::replace);
}

}  // namespace robotaxi::protocol
