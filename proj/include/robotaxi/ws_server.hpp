#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/tcp.hpp>

#include "robotaxi/event_log.hpp"
#include "robotaxi/scheduler.hpp"
#include "robotaxi/server_core.hpp"

namespace robotaxi::gateway {

/// WebSocket upgrades are accepted on this path only.
inline constexpr std::string_view kChatPath = "/chat";

class BindFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class WsSession;

/// RFC 6455 front end for a ServerCore. Every accepted socket gets its own
/// strand; outbound frames go through a per-connection queue, so concurrent
/// writers never interleave.
class WsServer {
 public:
  WsServer(ServerCore& core, boost::asio::io_context& io);
  ~WsServer();

  /// Binds and starts accepting. Throws BindFailure.
  void listen(const std::string& address, std::uint16_t port);
  std::uint16_t port() const { return port_; }
  /// Stops accepting and closes every open connection.
  void stop();

 private:
  friend class WsSession;
  void do_accept();

  ServerCore& core_;
  boost::asio::io_context& io_;
  boost::asio::ip::tcp::acceptor acceptor_;
  std::uint16_t port_ = 0;
  std::mutex mu_;
  std::vector<std::weak_ptr<WsSession>> sessions_;
  bool stopped_ = false;
};

struct ServeConfig {
  std::string bind = "127.0.0.1";
  std::uint16_t port = 0;
  int threads = 1;
  ServerOptions options;
};

/// A complete running server: io threads, wall-clock scheduler, routing core
/// and WebSocket listener.
class RunningServer {
 public:
  /// Throws BindFailure when the address cannot be bound.
  RunningServer(const ServeConfig& config, EventLog* log = nullptr);
  ~RunningServer();

  RunningServer(const RunningServer&) = delete;
  RunningServer& operator=(const RunningServer&) = delete;

  std::uint16_t port() const { return server_->port(); }
  std::string url() const;
  ServerCore& core() { return *core_; }
  boost::asio::io_context& io() { return io_; }

  /// Terminates sessions, flushes the event log, closes connections and joins
  /// the io threads. Idempotent.
  void stop();

 private:
  std::string bind_;
  boost::asio::io_context io_;
  std::unique_ptr<AsioScheduler> scheduler_;
  std::unique_ptr<ServerCore> core_;
  std::unique_ptr<WsServer> server_;
  std::vector<std::thread> threads_;
  bool stopped_ = false;
};

}  // namespace robotaxi::gateway
