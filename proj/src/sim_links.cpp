#include "robotaxi/sim_links.hpp"

#include <atomic>
#include <deque>
#include <future>

#include "robotaxi/ws_client.hpp"

namespace robotaxi::sim {
namespace {

// Shared inbox: raw frames in, decoded messages out.
class Inbox {
 public:
  void push(std::string text) {
    std::lock_guard lock(mu_);
    frames_.push_back({std::move(text), std::chrono::steady_clock::now()});
  }

  std::vector<Inbound> drain() {
    std::deque<std::pair<std::string, std::chrono::steady_clock::time_point>> frames;
    {
      std::lock_guard lock(mu_);
      frames.swap(frames_);
    }
    std::vector<Inbound> out;
    out.reserve(frames.size());
    for (auto& [text, at] : frames) {
      try {
        out.push_back({protocol::decode(text), at});
      } catch (const protocol::DecodeError&) {
      }
    }
    return out;
  }

 private:
  std::mutex mu_;
  std::deque<std::pair<std::string, std::chrono::steady_clock::time_point>> frames_;
};

class InboxStream final : public Stream {
 public:
  bool send(const protocol::Message& m) override {
    if (!open_.load()) return false;
    inbox.push(protocol::encode(m));
    return true;
  }
  bool is_open() const override { return open_.load(); }
  void mark_closed() { open_ = false; }

  Inbox inbox;

 private:
  std::atomic<bool> open_{true};
};

class InProcessLink final : public ClientLink {
 public:
  explicit InProcessLink(gateway::ServerCore& core)
      : stream_(std::make_shared<InboxStream>()), conn_(core.open(stream_)) {}
  ~InProcessLink() override { close(); }

  void send(const protocol::Message& m) override {
    if (stream_->is_open()) conn_->on_text(protocol::encode(m));
  }
  std::vector<Inbound> drain() override { return stream_->inbox.drain(); }
  bool is_open() const override { return stream_->is_open(); }
  void close() override {
    if (!stream_->is_open()) return;
    stream_->mark_closed();
    conn_->on_close();
  }

 private:
  std::shared_ptr<InboxStream> stream_;
  std::shared_ptr<gateway::Connection> conn_;
};

class WsLink final : public ClientLink {
 public:
  explicit WsLink(std::shared_ptr<net::WsClient> client) : client_(std::move(client)) {}
  ~WsLink() override { close(); }

  void send(const protocol::Message& m) override { client_->send(protocol::encode(m)); }
  std::vector<Inbound> drain() override { return inbox->drain(); }
  bool is_open() const override { return client_->is_open(); }
  void close() override {
    if (client_->is_open()) client_->close();
  }

  std::shared_ptr<Inbox> inbox = std::make_shared<Inbox>();

 private:
  std::shared_ptr<net::WsClient> client_;
};

}  // namespace

std::unique_ptr<ClientLink> InProcessLinkFactory::connect() { return std::make_unique<InProcessLink>(core_); }

WsLinkFactory::WsLinkFactory(std::string url)
    : url_(std::move(url)),
      work_(std::make_unique<boost::asio::executor_work_guard<boost::asio::io_context::executor_type>>(
          io_.get_executor())),
      thread_([this] { io_.run(); }) {}

WsLinkFactory::~WsLinkFactory() {
  work_.reset();
  // Give close handshakes a moment before tearing the loop down.
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(1);
  while (!io_.stopped() && std::chrono::steady_clock::now() < deadline) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  io_.stop();
  thread_.join();
}

std::unique_ptr<ClientLink> WsLinkFactory::connect() {
  net::WsUrl url;
  try {
    url = net::parse_ws_url(url_);
  } catch (const std::invalid_argument& e) {
    throw net::ConnectFailure(e.what());
  }
  auto client = net::WsClient::create(io_);
  auto link = std::make_unique<WsLink>(client);
  client->set_on_message([inbox = link->inbox](std::string_view text) { inbox->push(std::string(text)); });
  auto done = std::make_shared<std::promise<boost::system::error_code>>();
  auto result = done->get_future();
  client->async_connect(url, [done](boost::system::error_code ec) { done->set_value(ec); });
  if (result.wait_for(std::chrono::seconds(10)) != std::future_status::ready) {
    throw net::ConnectFailure("timed out connecting to " + url_);
  }
  if (const auto ec = result.get()) throw net::ConnectFailure("cannot connect to " + url_ + ": " + ec.message());
  return link;
}

}  // namespace robotaxi::sim
