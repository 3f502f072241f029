#include "robotaxi/registry.hpp"

#include <mutex>
#include <stdexcept>

#include <json.hpp>

namespace robotaxi {

std::unique_ptr<EventLog> EventLog::open_file(const std::string& path) {
  auto file = std::make_unique<std::ofstream>(path, std::ios::app);
  if (!*file) throw std::runtime_error("cannot open event log '" + path + "'");
  std::unique_ptr<EventLog> log(new EventLog());
  log->out_ = file.get();
  log->owned_ = std::move(file);
  return log;
}

void EventLog::append(const std::string& line) {
  std::lock_guard lock(mu_);
  *out_ << line << '\n';
}

void EventLog::flush() {
  std::lock_guard lock(mu_);
  out_->flush();
}

}  // namespace robotaxi

namespace robotaxi::registry {
namespace {

using Json = nlohmann::ordered_json;

constexpr std::string_view kCustomers = "customers";
constexpr std::string_view kDrivers = "drivers";

std::string point_json(const GeoPoint& p) { return geo::render_coord_string(p); }

}  // namespace

Registry::Registry(EventLog* log, ClockFn now_ms) : log_(log), now_ms_(std::move(now_ms)) {}

void Registry::log(std::string_view op, std::string_view table, const std::string& id,
                   const std::string& fields_json) {
  if (log_ == nullptr) return;
  Json line;
  line["ts_ms"] = now_ms_ ? now_ms_() : 0;
  line["op"] = op;
  line["table"] = table;
  line["id"] = id;
  line["fields"] = Json::parse(fields_json);
  log_->append(line.dump(-1, ' ', false, Json::error_handler_t::replace));
}

CustomerRecord Registry::upsert_customer(const std::string& id, const GeoPoint& origin, StreamHandle stream) {
  if (id.empty()) throw std::invalid_argument("upsert_customer: empty id");
  std::unique_lock lock(customers_mu_);
  auto [it, inserted] = customers_.try_emplace(id);
  CustomerRecord& rec = it->second;
  if (inserted) rec.id = id;
  rec.origin = origin;
  if (stream) rec.stream = std::move(stream);
  if (log_ != nullptr) {
    Json f;
    f["origin"] = point_json(origin);
    log("upsert", kCustomers, id, f.dump());
  }
  return rec;
}

DriverRecord Registry::upsert_driver(const std::string& id, const GeoPoint& location,
                                     std::optional<bool> available, StreamHandle stream) {
  if (id.empty()) throw std::invalid_argument("upsert_driver: empty id");
  std::unique_lock lock(drivers_mu_);
  auto [it, inserted] = drivers_.try_emplace(id);
  DriverRecord& rec = it->second;
  if (inserted) rec.id = id;
  rec.curr_location = location;
  if (available) rec.is_available = *available;
  if (stream) rec.stream = std::move(stream);
  if (log_ != nullptr) {
    Json f;
    f["location"] = point_json(location);
    if (available) f["available"] = *available;
    log("upsert", kDrivers, id, f.dump());
  }
  return rec;
}

bool Registry::set_availability(const std::string& id, bool available) {
  std::unique_lock lock(drivers_mu_);
  const auto it = drivers_.find(id);
  if (it == drivers_.end()) return false;
  it->second.is_available = available;
  if (log_ != nullptr) {
    Json f;
    f["available"] = available;
    log("set_availability", kDrivers, id, f.dump());
  }
  return true;
}

bool Registry::set_destination(const std::string& id, std::optional<GeoPoint> destination) {
  std::unique_lock lock(customers_mu_);
  const auto it = customers_.find(id);
  if (it == customers_.end()) return false;
  it->second.destination = destination;
  if (log_ != nullptr) {
    Json f;
    f["destination"] = destination ? Json(point_json(*destination)) : Json(nullptr);
    log("set_destination", kCustomers, id, f.dump());
  }
  return true;
}

std::optional<CustomerRecord> Registry::find_customer(const std::string& id) const {
  std::shared_lock lock(customers_mu_);
  const auto it = customers_.find(id);
  if (it == customers_.end()) return std::nullopt;
  return it->second;
}

std::optional<DriverRecord> Registry::find_driver(const std::string& id) const {
  std::shared_lock lock(drivers_mu_);
  const auto it = drivers_.find(id);
  if (it == drivers_.end()) return std::nullopt;
  return it->second;
}

std::vector<DriverRecord> Registry::available_drivers() const {
  std::shared_lock lock(drivers_mu_);
  std::vector<DriverRecord> out;
  for (const auto& [id, rec] : drivers_) {
    if (rec.is_available) out.push_back(rec);
  }
  return out;
}

void Registry::visit_available(const std::function<void(const DriverRecord&)>& fn) const {
  std::shared_lock lock(drivers_mu_);
  for (const auto& [id, rec] : drivers_) {
    if (rec.is_available) fn(rec);
  }
}

std::vector<DriverRecord> Registry::drivers() const {
  std::shared_lock lock(drivers_mu_);
  std::vector<DriverRecord> out;
  out.reserve(drivers_.size());
  for (const auto& [id, rec] : drivers_) out.push_back(rec);
  return out;
}

std::vector<CustomerRecord> Registry::customers() const {
  std::shared_lock lock(customers_mu_);
  std::vector<CustomerRecord> out;
  out.reserve(customers_.size());
  for (const auto& [id, rec] : customers_) out.push_back(rec);
  return out;
}

bool Registry::remove_on_disconnect(const std::string& id, PeerKind kind, const Stream* only_stream) {
  auto erase = [&](auto& mu, auto& table, std::string_view name) {
    std::unique_lock lock(mu);
    const auto it = table.find(id);
    if (it == table.end()) return false;
    if (only_stream != nullptr && it->second.stream.get() != only_stream) return false;
    table.erase(it);
    log("remove", name, id, "{}");
    return true;
  };
  return kind == PeerKind::Customer ? erase(customers_mu_, customers_, kCustomers)
                                    : erase(drivers_mu_, drivers_, kDrivers);
}

std::uint64_t Registry::increment_pickups() {
  std::lock_guard lock(pickups_mu_);
  const auto n = pickups_.fetch_add(1) + 1;
  if (log_ != nullptr) {
    Json f;
    f["pickups"] = n;
    log("increment", "counters", "pickups", f.dump());
  }
  return n;
}

Counters Registry::counters() const {
  Counters c;
  {
    std::shared_lock lock(customers_mu_);
    c.customers = customers_.size();
  }
  {
    std::shared_lock lock(drivers_mu_);
    c.drivers = drivers_.size();
  }
  c.pickups = pickups_.load();
  return c;
}

std::size_t replay_event_log(std::istream& in, Registry& target) {
  std::size_t applied = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const Json ev = Json::parse(line, nullptr, false);
    if (ev.is_discarded() || !ev.is_object()) throw std::runtime_error("malformed event log line");
    if (!ev.contains("table") || !ev.contains("op")) continue;  // non-registry event
    try {
      const auto table = ev.at("table").get<std::string>();
      const auto op = ev.at("op").get<std::string>();
      const auto id = ev.at("id").get<std::string>();
      const Json& f = ev.at("fields");
      if (table == kCustomers) {
        if (op == "upsert") {
          target.upsert_customer(id, geo::parse_coord_string(f.at("origin").get<std::string>()), nullptr);
        } else if (op == "set_destination") {
          const Json& d = f.at("destination");
          target.set_destination(
              id, d.is_null() ? std::nullopt
                              : std::optional(geo::parse_coord_string(d.get<std::string>())));
        } else if (op == "remove") {
          target.remove_on_disconnect(id, PeerKind::Customer);
        } else {
          continue;
        }
      } else if (table == kDrivers) {
        if (op == "upsert") {
          std::optional<bool> available;
          if (f.contains("available")) available = f.at("available").get<bool>();
          target.upsert_driver(id, geo::parse_coord_string(f.at("location").get<std::string>()),
                               available, nullptr);
        } else if (op == "set_availability") {
          target.set_availability(id, f.at("available").get<bool>());
        } else if (op == "remove") {
          target.remove_on_disconnect(id, PeerKind::Driver);
        } else {
          continue;
        }
      } else if (table == "counters" && op == "increment") {
        target.increment_pickups();
      } else {
        continue;
      }
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string("malformed event log line: ") + e.what());
    }
    ++applied;
  }
  return applied;
}

}  // namespace robotaxi::registry
