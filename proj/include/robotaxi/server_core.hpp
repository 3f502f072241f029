#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "robotaxi/dispatch.hpp"
#include "robotaxi/event_log.hpp"
#include "robotaxi/registry.hpp"
#include "robotaxi/scheduler.hpp"
#include "robotaxi/stream.hpp"

namespace robotaxi::gateway {

enum class PeerKind { Unknown, Customer, Driver, Monitor };

std::string_view to_string(PeerKind kind) noexcept;

struct ServerOptions {
  dispatch::DispatchConfig dispatch;
  /// Acknowledge every location message with {"Ack":"Driver"|"Customer"}.
  bool ack = false;
  /// Accept {"Type":"Subscribe"} and push MonitorSnapshot frames.
  bool monitor = false;
  Millis monitor_period{1000};
};

class ServerCore;

/// Server-side state of one client connection. The transport feeds it frames
/// in arrival order and reports the close exactly once.
class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(ServerCore& core, StreamHandle stream);

  void on_text(std::string_view frame);
  void on_close();

  PeerKind kind() const;
  std::optional<std::string> bound_id() const;
  const StreamHandle& stream() const { return stream_; }

 private:
  friend class ServerCore;

  ServerCore& core_;
  StreamHandle stream_;
  mutable std::mutex mu_;
  PeerKind kind_ = PeerKind::Unknown;
  std::optional<std::string> id_;
  bool closed_ = false;
};

struct GatewayStats {
  std::uint64_t connections_opened = 0;
  std::uint64_t connections_closed = 0;
  std::uint64_t frames_received = 0;
  std::uint64_t errors_sent = 0;
  std::uint64_t drivers_registered = 0;    // driver identities ever bound
  std::uint64_t drivers_disconnected = 0;  // bound drivers whose connection closed
};

/// Routes decoded client messages to the registry and the dispatch engine.
/// Independent of the transport: the WebSocket server and the in-process
/// links both drive it through Connection.
class ServerCore {
 public:
  ServerCore(Scheduler& scheduler, ServerOptions options = {}, EventLog* log = nullptr);
  ~ServerCore();

  ServerCore(const ServerCore&) = delete;
  ServerCore& operator=(const ServerCore&) = delete;

  std::shared_ptr<Connection> open(StreamHandle outbound);

  registry::Registry& registry() { return registry_; }
  const registry::Registry& registry() const { return registry_; }
  dispatch::DispatchEngine& dispatch() { return engine_; }
  const dispatch::DispatchEngine& dispatch() const { return engine_; }
  Scheduler& scheduler() { return scheduler_; }
  const ServerOptions& options() const { return options_; }

  protocol::MonitorSnapshot snapshot() const;
  GatewayStats stats() const;

  /// Ends every session with a final Aborted relay and stops the monitor feed.
  void terminate_sessions();
  /// terminate_sessions(), then writes the final log line and flushes the log.
  void shutdown();

 private:
  friend class Connection;

  void route(Connection& conn, const protocol::Message& msg);
  void handle_close(Connection& conn);
  void send_error(Connection& conn, std::string_view code);
  /// Binds the connection on first use; false (error sent) on a conflict.
  bool bind(Connection& conn, PeerKind kind, const std::string& id);
  void monitor_tick();

  Scheduler& scheduler_;
  ServerOptions options_;
  EventLog* log_;
  registry::Registry registry_;
  dispatch::DispatchEngine engine_;

  mutable std::mutex mu_;
  std::vector<std::weak_ptr<Connection>> monitors_;
  std::optional<TimerId> monitor_timer_;
  bool shut_down_ = false;
  bool final_logged_ = false;

  std::atomic<std::uint64_t> connections_opened_{0};
  std::atomic<std::uint64_t> connections_closed_{0};
  std::atomic<std::uint64_t> frames_received_{0};
  std::atomic<std::uint64_t> errors_sent_{0};
  std::atomic<std::uint64_t> drivers_registered_{0};
  std::atomic<std::uint64_t> drivers_disconnected_{0};
};

}  // namespace robotaxi::gateway
