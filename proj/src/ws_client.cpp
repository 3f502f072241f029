#include "robotaxi/ws_client.hpp"

#include <atomic>
#include <charconv>
#include <future>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

namespace robotaxi::net {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

WsUrl parse_ws_url(const std::string& url) {
  constexpr std::string_view kScheme = "ws://";
  std::string_view s(url);
  if (s.substr(0, kScheme.size()) != kScheme) throw std::invalid_argument("url must start with ws://: " + url);
  s.remove_prefix(kScheme.size());
  WsUrl out;
  const auto slash = s.find('/');
  const std::string_view authority = s.substr(0, slash);
  out.path = slash == std::string_view::npos ? "/" : std::string(s.substr(slash));
  const auto colon = authority.rfind(':');
  if (colon == std::string_view::npos || colon == 0) throw std::invalid_argument("url needs host:port: " + url);
  out.host = std::string(authority.substr(0, colon));
  const std::string_view port = authority.substr(colon + 1);
  unsigned value = 0;
  const auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (ec != std::errc{} || ptr != port.data() + port.size() || value == 0 || value > 65535) {
    throw std::invalid_argument("bad port in url: " + url);
  }
  out.port = static_cast<std::uint16_t>(value);
  return out;
}

class WsClient::Impl : public std::enable_shared_from_this<WsClient::Impl> {
 public:
  explicit Impl(asio::io_context& io) : resolver_(asio::make_strand(io)), ws_(resolver_.get_executor()) {}

  MessageHandler on_message;
  CloseHandler on_close;

  void connect(const WsUrl& url, ConnectHandler done) {
    url_ = url;
    done_ = std::move(done);
    resolver_.async_resolve(url_.host, std::to_string(url_.port),
                            [self = shared_from_this()](beast::error_code ec, tcp::resolver::results_type results) {
                              if (ec) return self->fail_connect(ec);
                              beast::get_lowest_layer(self->ws_).expires_after(std::chrono::seconds(10));
                              beast::get_lowest_layer(self->ws_).async_connect(
                                  results, [self](beast::error_code ec, const tcp::endpoint&) { self->on_tcp(ec); });
                            });
  }

  void send(std::string text) {
    asio::post(ws_.get_executor(), [self = shared_from_this(), text = std::move(text)]() mutable {
      if (!self->open_) return;
      self->outbox_.push_back(std::move(text));
      if (self->outbox_.size() == 1) self->write_next();
    });
  }

  void close() {
    asio::post(ws_.get_executor(), [self = shared_from_this()] {
      if (!self->open_) return;
      self->ws_.async_close(websocket::close_code::normal, [self](beast::error_code) { self->finish(); });
    });
  }

  bool is_open() const { return open_.load(); }

 private:
  void fail_connect(beast::error_code ec) {
    if (auto done = std::exchange(done_, nullptr)) done(ec);
  }

  void on_tcp(beast::error_code ec) {
    if (ec) return fail_connect(ec);
    beast::error_code opt_ec;
    beast::get_lowest_layer(ws_).socket().set_option(tcp::no_delay(true), opt_ec);
    beast::get_lowest_layer(ws_).expires_never();
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::client));
    ws_.read_message_max(16 << 20);
    const std::string host = url_.host + ":" + std::to_string(url_.port);
    ws_.async_handshake(host, url_.path, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->fail_connect(ec);
      self->ws_.text(true);
      self->open_ = true;
      self->fail_connect({});
      self->read();
    });
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->finish();
      const auto data = self->buffer_.data();
      if (self->on_message) {
        self->on_message(std::string_view(static_cast<const char*>(data.data()), data.size()));
      }
      self->buffer_.consume(self->buffer_.size());
      self->read();
    });
  }

  void write_next() {
    ws_.async_write(asio::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->finish();
      self->outbox_.pop_front();
      if (!self->outbox_.empty()) self->write_next();
    });
  }

  void finish() {
    const bool was_open = open_.exchange(false);
    outbox_.clear();
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().close(ec);
    if (was_open && on_close) {
      auto h = std::exchange(on_close, nullptr);
      h();
    }
    on_message = nullptr;
  }

  tcp::resolver resolver_;
  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  WsUrl url_;
  ConnectHandler done_;
  std::atomic<bool> open_{false};
};

WsClient::WsClient(asio::io_context& io) : impl_(std::make_shared<Impl>(io)) {}

WsClient::~WsClient() = default;

std::shared_ptr<WsClient> WsClient::create(asio::io_context& io) {
  return std::shared_ptr<WsClient>(new WsClient(io));
}

void WsClient::async_connect(const WsUrl& url, ConnectHandler done) {
  impl_->on_message = on_message_;
  impl_->on_close = on_close_;
  impl_->connect(url, std::move(done));
}

void WsClient::send(std::string text) { impl_->send(std::move(text)); }
void WsClient::close() { impl_->close(); }
bool WsClient::is_open() const { return impl_->is_open(); }

SyncClient::SyncClient() = default;

SyncClient::~SyncClient() {
  const bool was_open = is_open();
  close();
  if (thread_.joinable()) {
    if (was_open) wait_closed(std::chrono::seconds(2));
    io_.stop();
    thread_.join();
  }
}

void SyncClient::connect(const std::string& url, std::chrono::milliseconds timeout) {
  WsUrl parsed;
  try {
    parsed = parse_ws_url(url);
  } catch (const std::invalid_argument& e) {
    throw ConnectFailure(e.what());
  }
  client_ = WsClient::create(io_);
  client_->set_on_message([this](std::string_view text) {
    {
      std::lock_guard lock(mu_);
      inbox_.push_back({std::string(text), std::chrono::steady_clock::now()});
    }
    cv_.notify_all();
  });
  client_->set_on_close([this] {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  });
  auto result = std::make_shared<std::promise<boost::system::error_code>>();
  auto future = result->get_future();
  client_->async_connect(parsed, [result](boost::system::error_code ec) { result->set_value(ec); });
  auto guard = asio::make_work_guard(io_);
  thread_ = std::thread([this, g = std::move(guard)]() mutable {
    io_.run();
    (void)g;
  });
  if (future.wait_for(timeout) != std::future_status::ready) {
    throw ConnectFailure("timed out connecting to " + url);
  }
  if (const auto ec = future.get()) throw ConnectFailure("cannot connect to " + url + ": " + ec.message());
}

void SyncClient::send_text(std::string text) {
  if (client_) client_->send(std::move(text));
}

std::optional<SyncClient::Frame> SyncClient::receive(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  if (!cv_.wait_for(lock, timeout, [&] { return !inbox_.empty() || closed_; })) return std::nullopt;
  if (inbox_.empty()) return std::nullopt;
  Frame f = std::move(inbox_.front());
  inbox_.pop_front();
  return f;
}

std::deque<SyncClient::Frame> SyncClient::drain() {
  std::lock_guard lock(mu_);
  return std::exchange(inbox_, {});
}

bool SyncClient::wait_closed(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  return cv_.wait_for(lock, timeout, [&] { return closed_; });
}

void SyncClient::close() {
  if (client_ && client_->is_open()) client_->close();
}

bool SyncClient::is_open() const { return client_ && client_->is_open(); }

}  // namespace robotaxi::net
