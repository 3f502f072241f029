#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <boost/asio/io_context.hpp>

#include "robotaxi/protocol.hpp"
#include "robotaxi/server_core.hpp"
#include "robotaxi/ws_client.hpp"

namespace robotaxi::sim {

struct Inbound {
  protocol::Message message;
  std::chrono::steady_clock::time_point received_at;
};

/// One agent's connection to the server, seen from the client side.
class ClientLink {
 public:
  virtual ~ClientLink() = default;

  virtual void send(const protocol::Message& m) = 0;
  /// Decoded frames received since the last call, in arrival order.
  /// Undecodable frames are dropped.
  virtual std::vector<Inbound> drain() = 0;
  virtual bool is_open() const = 0;
  virtual void close() = 0;
};

class LinkFactory {
 public:
  virtual ~LinkFactory() = default;

  /// Throws net::ConnectFailure.
  virtual std::unique_ptr<ClientLink> connect() = 0;
  /// True when every send is fully processed before it returns, so replies
  /// are already queued (in-process transport).
  virtual bool synchronous() const = 0;
};

/// Links that call straight into a ServerCore; frames still go through the
/// JSON codec in both directions.
class InProcessLinkFactory final : public LinkFactory {
 public:
  explicit InProcessLinkFactory(gateway::ServerCore& core) : core_(core) {}
  std::unique_ptr<ClientLink> connect() override;
  bool synchronous() const override { return true; }

 private:
  gateway::ServerCore& core_;
};

/// WebSocket links sharing one io thread.
class WsLinkFactory final : public LinkFactory {
 public:
  explicit WsLinkFactory(std::string url);
  ~WsLinkFactory() override;

  std::unique_ptr<ClientLink> connect() override;
  bool synchronous() const override { return false; }

 private:
  std::string url_;
  boost::asio::io_context io_;
  std::unique_ptr<boost::asio::executor_work_guard<boost::asio::io_context::executor_type>> work_;
  std::thread thread_;
};

}  // namespace robotaxi::sim
