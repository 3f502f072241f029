#include "robotaxi/ws_server.hpp"

#include <atomic>
#include <deque>

#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

namespace robotaxi::gateway {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(WsServer& server, tcp::socket socket) : server_(server), ws_(std::move(socket)) {}

  void start() {
    asio::dispatch(ws_.get_executor(), [self = shared_from_this()] { self->read_request(); });
  }

  // Thread-safe; queues one text frame.
  bool enqueue(std::string text) {
    if (closed_.load()) return false;
    asio::post(ws_.get_executor(), [self = shared_from_this(), text = std::move(text)]() mutable {
      self->outbox_.push_back(std::move(text));
      if (self->outbox_.size() == 1 && self->accepted_) self->write_next();
    });
    return true;
  }

  bool is_open() const { return !closed_.load(); }

  void close() {
    asio::post(ws_.get_executor(), [self = shared_from_this()] {
      beast::error_code ec;
      beast::get_lowest_layer(self->ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
      beast::get_lowest_layer(self->ws_).close();
    });
  }

 private:
  class SessionStream final : public Stream {
   public:
    explicit SessionStream(std::weak_ptr<WsSession> session) : session_(std::move(session)) {}
    bool send(const protocol::Message& m) override {
      auto s = session_.lock();
      return s && s->enqueue(protocol::encode(m));
    }
    bool is_open() const override {
      auto s = session_.lock();
      return s && s->is_open();
    }

   private:
    std::weak_ptr<WsSession> session_;
  };

  void read_request() {
    beast::get_lowest_layer(ws_).expires_after(std::chrono::seconds(30));
    http::async_read(beast::get_lowest_layer(ws_), buffer_, request_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_request(ec); });
  }

  void on_request(beast::error_code ec) {
    if (ec) return finish();
    std::string_view target(request_.target().data(), request_.target().size());
    if (const auto q = target.find('?'); q != std::string_view::npos) target = target.substr(0, q);
    if (!websocket::is_upgrade(request_) || target != kChatPath) {
      auto res = std::make_shared<http::response<http::string_body>>(http::status::not_found, request_.version());
      res->set(http::field::content_type, "text/plain");
      res->body() = "websocket endpoint is ws://<host>:<port>/chat\n";
      res->prepare_payload();
      http::async_write(beast::get_lowest_layer(ws_), *res,
                        [self = shared_from_this(), res](beast::error_code, std::size_t) { self->finish(); });
      return;
    }
    beast::get_lowest_layer(ws_).expires_never();
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.read_message_max(1 << 20);
    ws_.async_accept(request_, [self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

  void on_accept(beast::error_code ec) {
    if (ec) return finish();
    ws_.text(true);
    accepted_ = true;
    stream_ = std::make_shared<SessionStream>(weak_from_this());
    conn_ = server_.core_.open(stream_);
    if (!outbox_.empty()) write_next();
    read_frame();
  }

  void read_frame() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_frame(ec); });
  }

  void on_frame(beast::error_code ec) {
    if (ec) return finish();
    const auto data = buffer_.data();
    std::string_view text(static_cast<const char*>(data.data()), data.size());
    conn_->on_text(text);
    buffer_.consume(buffer_.size());
    read_frame();
  }

  void write_next() {
    ws_.async_write(asio::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->outbox_.clear();
        return self->finish();
      }
      self->outbox_.pop_front();
      if (!self->outbox_.empty()) self->write_next();
    });
  }

  void finish() {
    if (closed_.exchange(true)) return;
    outbox_.clear();
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().close(ec);
    if (conn_) conn_->on_close();
  }

  WsServer& server_;
  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
  std::deque<std::string> outbox_;
  std::shared_ptr<Connection> conn_;
  std::shared_ptr<SessionStream> stream_;
  bool accepted_ = false;
  std::atomic<bool> closed_{false};
};

WsServer::WsServer(ServerCore& core, asio::io_context& io) : core_(core), io_(io), acceptor_(asio::make_strand(io)) {}

WsServer::~WsServer() = default;

void WsServer::listen(const std::string& address, std::uint16_t port) {
  beast::error_code ec;
  const auto addr = asio::ip::make_address(address, ec);
  if (ec) throw BindFailure("invalid bind address '" + address + "': " + ec.message());
  const tcp::endpoint endpoint(addr, port);
  acceptor_.open(endpoint.protocol(), ec);
  if (!ec) acceptor_.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) acceptor_.bind(endpoint, ec);
  if (!ec) acceptor_.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) {
    throw BindFailure("cannot listen on " + address + ":" + std::to_string(port) + ": " + ec.message());
  }
  port_ = acceptor_.local_endpoint().port();
  do_accept();
}

void WsServer::do_accept() {
  acceptor_.async_accept(asio::make_strand(io_), [this](beast::error_code ec, tcp::socket socket) {
    if (ec == asio::error::operation_aborted) return;
    if (!ec) {
      beast::error_code opt_ec;
      socket.set_option(tcp::no_delay(true), opt_ec);
      auto session = std::make_shared<WsSession>(*this, std::move(socket));
      {
        std::lock_guard lock(mu_);
        if (stopped_) return;
        sessions_.push_back(session);
        if (sessions_.size() > 1024 && sessions_.size() % 1024 == 0) {
          std::erase_if(sessions_, [](const std::weak_ptr<WsSession>& w) { return w.expired(); });
        }
      }
      session->start();
    } else {
      spdlog::warn("accept failed: {}", ec.message());
    }
    do_accept();
  });
}

void WsServer::stop() {
  std::vector<std::shared_ptr<WsSession>> open;
  {
    std::lock_guard lock(mu_);
    if (stopped_) return;
    stopped_ = true;
    for (auto& w : sessions_) {
      if (auto s = w.lock()) open.push_back(std::move(s));
    }
    sessions_.clear();
  }
  asio::post(acceptor_.get_executor(), [this] {
    beast::error_code ec;
    acceptor_.close(ec);
  });
  for (auto& s : open) s->close();
}

RunningServer::RunningServer(const ServeConfig& config, EventLog* log) : bind_(config.bind) {
  scheduler_ = std::make_unique<AsioScheduler>(io_);
  core_ = std::make_unique<ServerCore>(*scheduler_, config.options, log);
  server_ = std::make_unique<WsServer>(*core_, io_);
  server_->listen(config.bind, config.port);
  const int n = std::max(1, config.threads);
  threads_.reserve(n);
  for (int i = 0; i < n; ++i) threads_.emplace_back([this] { io_.run(); });
}

RunningServer::~RunningServer() { stop(); }

std::string RunningServer::url() const {
  return "ws://" + bind_ + ":" + std::to_string(port()) + std::string(kChatPath);
}

void RunningServer::stop() {
  if (stopped_) return;
  stopped_ = true;
  core_->terminate_sessions();
  server_->stop();
  scheduler_->cancel_all();
  // Let close handlers run, then stop.
  auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(2);
  while (core_->stats().connections_closed < core_->stats().connections_opened &&
         std::chrono::steady_clock::now() < deadline) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  io_.stop();
  for (auto& t : threads_) t.join();
  threads_.clear();
  // Last, so the shutdown record follows the disconnect removals.
  core_->shutdown();
}

}  // namespace robotaxi::gateway
