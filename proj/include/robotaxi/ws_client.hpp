#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>

#include <boost/asio/io_context.hpp>
#include <boost/system/error_code.hpp>

#include "robotaxi/protocol.hpp"

namespace robotaxi::net {

class ConnectFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct WsUrl {
  std::string host;
  std::uint16_t port = 0;
  std::string path = "/";
};

/// Parses ws://host:port/path. Throws std::invalid_argument.
WsUrl parse_ws_url(const std::string& url);

/// Asynchronous WebSocket client on a caller-owned io_context. Handlers run
/// on the io threads; send() is thread-safe and never interleaves frames.
class WsClient : public std::enable_shared_from_this<WsClient> {
 public:
  using MessageHandler = std::function<void(std::string_view text)>;
  using CloseHandler = std::function<void()>;
  using ConnectHandler = std::function<void(boost::system::error_code)>;

  static std::shared_ptr<WsClient> create(boost::asio::io_context& io);
  ~WsClient();

  void set_on_message(MessageHandler h) { on_message_ = std::move(h); }
  void set_on_close(CloseHandler h) { on_close_ = std::move(h); }

  void async_connect(const WsUrl& url, ConnectHandler done);
  void send(std::string text);
  void close();
  bool is_open() const;

  class Impl;

 private:
  explicit WsClient(boost::asio::io_context& io);

  std::shared_ptr<Impl> impl_;
  MessageHandler on_message_;
  CloseHandler on_close_;
};

/// Blocking client with its own io thread; frames queue until received.
class SyncClient {
 public:
  SyncClient();
  ~SyncClient();

  SyncClient(const SyncClient&) = delete;
  SyncClient& operator=(const SyncClient&) = delete;

  /// Throws ConnectFailure.
  void connect(const std::string& url, std::chrono::milliseconds timeout = std::chrono::seconds(5));
  void send_text(std::string text);
  void send(const protocol::Message& m) { send_text(protocol::encode(m)); }

  struct Frame {
    std::string text;
    std::chrono::steady_clock::time_point received_at;
  };
  /// Waits up to `timeout` for the next frame.
  std::optional<Frame> receive(std::chrono::milliseconds timeout);
  /// Waits for the next frame that decodes to T, discarding others.
  template <typename T>
  std::optional<T> receive_as(std::chrono::milliseconds timeout);
  std::deque<Frame> drain();
  /// Waits until the connection closes or `timeout` elapses.
  bool wait_closed(std::chrono::milliseconds timeout);

  void close();
  bool is_open() const;

 private:
  boost::asio::io_context io_;
  std::shared_ptr<WsClient> client_;
  std::thread thread_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Frame> inbox_;
  bool closed_ = false;
};

template <typename T>
std::optional<T> SyncClient::receive_as(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) return std::nullopt;
    auto frame = receive(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now));
    if (!frame) return std::nullopt;
    try {
      auto msg = protocol::decode(frame->text);
      if (auto* m = std::get_if<T>(&msg)) return *m;
    } catch (const protocol::DecodeError&) {
    }
  }
}

}  // namespace robotaxi::net
