#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "robotaxi/event_log.hpp"
#include "robotaxi/geo.hpp"
#include "robotaxi/stream.hpp"

namespace robotaxi::registry {

using geo::GeoPoint;

enum class PeerKind { Customer, Driver };

/// Row of the customer table. `destination` is set while a ride request is
/// outstanding or active.
struct CustomerRecord {
  std::string id;
  GeoPoint origin;
  std::optional<GeoPoint> destination;
  StreamHandle stream;
};

/// Row of the driver table.
struct DriverRecord {
  std::string id;
  GeoPoint curr_location;
  bool is_available = false;
  StreamHandle stream;
};

struct Counters {
  std::uint64_t customers = 0;
  std::uint64_t drivers = 0;
  std::uint64_t pickups = 0;
};

/// In-memory real-time location database: a customer table, a driver table
/// and the pickup counter. Every operation is safe to call concurrently;
/// updates to one key are atomic. No cross-table transactions.
///
/// When an event log is attached every mutation is appended as
/// {"ts_ms","op","table","id","fields"} while the table lock is held, so the
/// log order is a valid linearization of each table.
class Registry {
 public:
  using ClockFn = std::function<std::int64_t()>;

  explicit Registry(EventLog* log = nullptr, ClockFn now_ms = {});

  Registry(const Registry&) = delete;
  Registry& operator=(const Registry&) = delete;

  CustomerRecord upsert_customer(const std::string& id, const GeoPoint& origin, StreamHandle stream);
  /// An absent `available` leaves the stored flag untouched (heartbeat);
  /// a new record without it starts unavailable.
  DriverRecord upsert_driver(const std::string& id, const GeoPoint& location,
                             std::optional<bool> available, StreamHandle stream);

  bool set_availability(const std::string& id, bool available);
  bool set_destination(const std::string& id, std::optional<GeoPoint> destination);

  std::optional<CustomerRecord> find_customer(const std::string& id) const;
  std::optional<DriverRecord> find_driver(const std::string& id) const;

  /// Point-in-time snapshot of drivers with is_available == true.
  std::vector<DriverRecord> available_drivers() const;
  /// Calls `fn` for each available driver under the table's shared lock;
  /// `fn` must not call back into the registry.
  void visit_available(const std::function<void(const DriverRecord&)>& fn) const;
  std::vector<DriverRecord> drivers() const;
  std::vector<CustomerRecord> customers() const;

  /// Removes the record. With `only_stream` set, removes it only while the
  /// record still belongs to that connection. Idempotent.
  bool remove_on_disconnect(const std::string& id, PeerKind kind, const Stream* only_stream = nullptr);

  std::uint64_t increment_pickups();
  Counters counters() const;

 private:
  void log(std::string_view op, std::string_view table, const std::string& id, const std::string& fields_json);

  EventLog* log_;
  ClockFn now_ms_;

  mutable std::shared_mutex customers_mu_;
  std::map<std::string, CustomerRecord, std::less<>> customers_;
  mutable std::shared_mutex drivers_mu_;
  std::map<std::string, DriverRecord, std::less<>> drivers_;
  std::mutex pickups_mu_;
  std::atomic<std::uint64_t> pickups_{0};
};

/// Re-applies a registry event log to `target` in file order. Streams are not
/// restored. Returns the number of events applied; throws std::runtime_error
/// on a malformed line.
std::size_t replay_event_log(std::istream& in, Registry& target);

}  // namespace robotaxi::registry
