#pragma once

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "robotaxi/ws_server.hpp"

namespace robotaxi {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Server settings merged from defaults, a JSON file, ROBOTAXI_* environment
/// variables and command-line flags (later sources win).
struct Config {
  std::string bind = "127.0.0.1";
  std::uint16_t port = 0;
  int threads = 1;
  bool monitor = false;
  bool ack = false;
  std::string event_log;
  double offer_timeout_s = 5.0;
  int max_retries = 3;
  int tick_period_ms = 1000;
  double pickup_radius_m = 5.0;
  double dropoff_radius_m = 5.0;
};

/// Every recognised key, in file order.
const std::vector<std::string>& config_keys();

/// Environment variable for a key: "offer_timeout_s" -> "ROBOTAXI_OFFER_TIMEOUT_S".
std::string env_name(std::string_view key);

/// Sets one key from its text form (flag or environment value).
/// Throws ConfigError on unknown keys or unparsable values.
void apply_setting(Config& config, std::string_view key, std::string_view value);

/// Applies a JSON object of settings. Unknown keys and wrong types throw.
void apply_json_text(Config& config, std::string_view json_text);
void apply_file(Config& config, const std::string& path);

using EnvLookup = std::function<std::optional<std::string>(const std::string& name)>;
/// Applies ROBOTAXI_* variables; `lookup` defaults to std::getenv.
void apply_env(Config& config, const EnvLookup& lookup = {});

/// Throws ConfigError when a value is out of range.
void validate(const Config& config);

/// defaults -> file (if any) -> env -> flags, then validate.
Config load_config(const std::optional<std::string>& file, const std::map<std::string, std::string>& flags,
                   const EnvLookup& lookup = {});

gateway::ServeConfig to_serve_config(const Config& config);

}  // namespace robotaxi
