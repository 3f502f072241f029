#include "robotaxi/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace robotaxi {

namespace {

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError("invalid value for " + std::string(key) + ": '" + std::string(text) + "'");
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "1" || lower == "true" || lower == "yes" || lower == "on") return true;
  if (lower == "0" || lower == "false" || lower == "no" || lower == "off") return false;
  throw ConfigError("invalid boolean for " + std::string(key) + ": '" + std::string(text) + "'");
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {"bind",          "port",           "threads",
                                                "monitor",       "ack",            "event_log",
                                                "offer_timeout_s", "max_retries",  "tick_period_ms",
                                                "pickup_radius_m", "dropoff_radius_m"};
  return keys;
}

std::string env_name(std::string_view key) {
  std::string out = "ROBOTAXI_";
  for (char c : key) out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  return out;
}

void apply_setting(Config& c, std::string_view key, std::string_view value) {
  if (key == "bind") {
    c.bind = std::string(value);
  } else if (key == "port") {
    const auto port = parse_number<unsigned>(key, value);
    if (port > 65535) throw ConfigError("port out of range: " + std::string(value));
    c.port = static_cast<std::uint16_t>(port);
  } else if (key == "threads") {
    c.threads = parse_number<int>(key, value);
  } else if (key == "monitor") {
    c.monitor = parse_bool(key, value);
  } else if (key == "ack") {
    c.ack = parse_bool(key, value);
  } else if (key == "event_log") {
    c.event_log = std::string(value);
  } else if (key == "offer_timeout_s") {
    c.offer_timeout_s = parse_number<double>(key, value);
  } else if (key == "max_retries") {
    c.max_retries = parse_number<int>(key, value);
  } else if (key == "tick_period_ms") {
    c.tick_period_ms = parse_number<int>(key, value);
  } else if (key == "pickup_radius_m") {
    c.pickup_radius_m = parse_number<double>(key, value);
  } else if (key == "dropoff_radius_m") {
    c.dropoff_radius_m = parse_number<double>(key, value);
  } else {
    throw ConfigError("unknown config key: " + std::string(key));
  }
}

void apply_json_text(Config& c, std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    const auto& keys = config_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw ConfigError("unknown config key: " + key);
    const bool wants_bool = key == "monitor" || key == "ack";
    const bool wants_string = key == "bind" || key == "event_log";
    if (wants_bool) {
      if (!v.is_boolean()) throw ConfigError(key + " must be a boolean");
      apply_setting(c, key, v.get<bool>() ? "true" : "false");
    } else if (wants_string) {
      if (!v.is_string()) throw ConfigError(key + " must be a string");
      apply_setting(c, key, v.get<std::string>());
    } else {
      if (!v.is_number()) throw ConfigError(key + " must be a number");
      apply_setting(c, key, v.dump());
    }
  }
}

void apply_file(Config& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  apply_json_text(c, ss.str());
}

void apply_env(Config& c, const EnvLookup& lookup) {
  for (const auto& key : config_keys()) {
    const std::string name = env_name(key);
    std::optional<std::string> value;
    if (lookup) {
      value = lookup(name);
    } else if (const char* raw = std::getenv(name.c_str())) {
      value = raw;
    }
    if (value) apply_setting(c, key, *value);
  }
}

void validate(const Config& c) {
  if (c.bind.empty()) throw ConfigError("bind must not be empty");
  if (c.threads < 1) throw ConfigError("threads must be >= 1");
  if (!(c.offer_timeout_s > 0.0) || !std::isfinite(c.offer_timeout_s)) throw ConfigError("offer_timeout_s must be > 0");
  if (c.max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (c.tick_period_ms < 1) throw ConfigError("tick_period_ms must be >= 1");
  if (!(c.pickup_radius_m > 0.0) || !(c.dropoff_radius_m > 0.0)) throw ConfigError("radii must be > 0");
}

Config load_config(const std::optional<std::string>& file, const std::map<std::string, std::string>& flags,
                   const EnvLookup& lookup) {
  Config c;
  if (file) apply_file(c, *file);
  apply_env(c, lookup);
  for (const auto& [key, value] : flags) apply_setting(c, key, value);
  validate(c);
  return c;
}

gateway::ServeConfig to_serve_config(const Config& c) {
  gateway::ServeConfig s;
  s.bind = c.bind;
  s.port = c.port;
  s.threads = c.threads;
  s.options.ack = c.ack;
  s.options.monitor = c.monitor;
  s.options.dispatch.offer_timeout = Millis{std::llround(c.offer_timeout_s * 1000.0)};
  s.options.dispatch.max_retries = c.max_retries;
  s.options.dispatch.tick_period = Millis{c.tick_period_ms};
  s.options.dispatch.arrival.pickup_radius_m = c.pickup_radius_m;
  s.options.dispatch.arrival.dropoff_radius_m = c.dropoff_radius_m;
  return s;
}

}  // namespace robotaxi
