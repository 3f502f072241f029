#include "robotaxi/loadgen.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <unistd.h>

#include <boost/asio/executor_work_guard.hpp>
#include <boost/asio/io_context.hpp>
#include <spdlog/spdlog.h>

#include "robotaxi/geo.hpp"
#include "robotaxi/protocol.hpp"
#include "robotaxi/road_graph.hpp"
#include "robotaxi/ws_client.hpp"

namespace robotaxi::loadgen {

using namespace robotaxi::protocol;
using Clock = std::chrono::steady_clock;

std::string_view to_string(LoadKind k) noexcept {
  return k == LoadKind::Registration ? "registration" : "booking";
}

LoadKind load_kind_from_string(std::string_view s) {
  if (s == "registration") return LoadKind::Registration;
  if (s == "booking") return LoadKind::Booking;
  throw std::invalid_argument("unknown load kind: " + std::string(s));
}

void validate(const LoadProfile& p) {
  if (p.n_requests == 0) throw std::invalid_argument("n_requests must be positive");
  if (p.concurrency == 0) throw std::invalid_argument("concurrency must be positive");
  if (p.concurrency > p.n_requests) throw std::invalid_argument("concurrency must not exceed n_requests");
  if (p.server_url.empty()) throw std::invalid_argument("server url is required");
  if (p.max_pending_connects == 0) throw std::invalid_argument("max_pending_connects must be positive");
}

double nearest_rank(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return 0.0;
  if (!(p > 0.0 && p <= 100.0)) throw std::invalid_argument("percentile must be in (0, 100]");
  const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(sorted.size())));
  return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

void summarize(LatencyReport& r) {
  if (r.samples_ms.empty()) {
    r.mean_ms = r.median_ms = r.p95_ms = r.p99_ms = 0.0;
    return;
  }
  std::vector<double> sorted = r.samples_ms;
  std::sort(sorted.begin(), sorted.end());
  r.mean_ms = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
  r.median_ms = nearest_rank(sorted, 50.0);
  r.p95_ms = nearest_rank(sorted, 95.0);
  r.p99_ms = nearest_rank(sorted, 99.0);
}

namespace {

enum class Outcome { Pending, Accepted, Rejected, TimedOut };

struct VirtualClient {
  std::shared_ptr<net::WsClient> ws;
  std::string id;
  GeoPoint position;
  GeoPoint destination;
  Clock::time_point sent_at{};
  Outcome outcome = Outcome::Pending;
  double latency_ms = 0.0;
  bool acked = false;
};

std::string run_prefix() {
  static std::atomic<unsigned> counter{0};
  return "lg" + std::to_string(::getpid()) + "-" + std::to_string(counter++);
}

/// Owns an io thread plus the virtual clients of one run.
class Harness {
 public:
  explicit Harness(const LoadProfile& profile)
      : profile_(profile), url_(net::parse_ws_url(profile.server_url)), rng_(profile.seed) {
    work_.emplace(io_.get_executor());
    thread_ = std::thread([this] {
      io_.run();
      std::lock_guard lock(mu_);
      io_done_ = true;
      cv_.notify_all();
    });
  }

  ~Harness() {
    close_all();
    work_.reset();
    {
      std::unique_lock lock(mu_);
      if (!cv_.wait_for(lock, std::chrono::seconds(2), [&] { return io_done_; })) io_.stop();
    }
    if (thread_.joinable()) thread_.join();
    // Sockets must go before the io_context they were created on.
    for (auto* group : groups_) {
      for (auto& c : *group) c.ws.reset();
    }
  }

  std::vector<VirtualClient>& make_clients(std::vector<VirtualClient>& group, std::size_t n, const std::string& prefix) {
    group.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      group[i].id = prefix + std::to_string(i);
      group[i].position = random_point();
      group[i].destination = random_point();
    }
    return group;
  }

  template <typename OnText>
  void connect_group(std::vector<VirtualClient>& group, OnText on_text) {
    std::size_t failures = 0;
    std::string first_error;
    for (std::size_t i = 0; i < group.size(); ++i) {
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return pending_connects_ < profile_.max_pending_connects; });
        ++pending_connects_;
      }
      auto ws = net::WsClient::create(io_);
      group[i].ws = ws;
      VirtualClient* client = &group[i];
      ws->set_on_message([client, on_text](std::string_view text) { on_text(*client, text); });
      ws->set_on_close([this] {
        std::lock_guard lock(mu_);
        ++closed_;
        cv_.notify_all();
      });
      ws->async_connect(url_, [this, &failures, &first_error](boost::system::error_code ec) {
        std::lock_guard lock(mu_);
        --pending_connects_;
        if (ec) {
          if (failures++ == 0) first_error = ec.message();
        } else {
          ++opened_;
        }
        cv_.notify_all();
      });
    }
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return pending_connects_ == 0; });
    if (failures > 0) {
      throw net::ConnectFailure("cannot connect to " + profile_.server_url + " (" + std::to_string(failures) +
                                " failures, first: " + first_error + ")");
    }
  }

  /// Marks a client resolved; only the first outcome counts.
  void resolve(VirtualClient& c, Outcome outcome, Clock::time_point at) {
    std::lock_guard lock(mu_);
    if (c.outcome != Outcome::Pending || c.sent_at == Clock::time_point{}) return;
    c.outcome = outcome;
    c.latency_ms = std::chrono::duration<double, std::milli>(at - c.sent_at).count();
    ++resolved_;
    cv_.notify_all();
  }

  void mark_acked(VirtualClient& c) {
    std::lock_guard lock(mu_);
    if (!c.acked) {
      c.acked = true;
      ++acked_;
      cv_.notify_all();
    }
  }

  /// Waits until `count` acks landed or `timeout` elapsed; returns acks seen.
  std::size_t wait_acks(std::size_t count, std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [&] { return acked_ >= count; });
    return acked_;
  }

  /// Fires requests in waves of `concurrency`; `fire` sends the timed frame.
  template <typename Fire>
  void fire_waves(std::vector<VirtualClient>& group, Fire fire) {
    for (std::size_t start = 0; start < group.size(); start += profile_.concurrency) {
      const std::size_t end = std::min(group.size(), start + profile_.concurrency);
      std::size_t target;
      {
        std::lock_guard lock(mu_);
        target = resolved_ + (end - start);
      }
      for (std::size_t i = start; i < end; ++i) fire(group[i]);
      std::unique_lock lock(mu_);
      const auto deadline = Clock::now() + profile_.request_timeout;
      cv_.wait_until(lock, deadline, [&] { return resolved_ >= target; });
      for (std::size_t i = start; i < end; ++i) {
        if (group[i].outcome == Outcome::Pending) {
          group[i].outcome = Outcome::TimedOut;
          ++resolved_;
        }
      }
    }
  }

  void stamp_sent(VirtualClient& c) {
    std::lock_guard lock(mu_);
    c.sent_at = Clock::now();
  }

  void close_all() {
    std::size_t expected;
    {
      std::lock_guard lock(mu_);
      expected = opened_;
    }
    for (auto* group : groups_) {
      for (auto& c : *group) {
        if (c.ws) c.ws->close();
      }
    }
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, std::chrono::seconds(5), [&] { return closed_ >= expected; });
  }

  void track(std::vector<VirtualClient>& group) { groups_.push_back(&group); }

 private:
  GeoPoint random_point() {
    std::uniform_real_distribution<double> bearing(0.0, 360.0);
    std::uniform_real_distribution<double> dist(0.0, 2000.0);
    return geo::destination_point(sim::kDefaultAnchor, bearing(rng_), dist(rng_));
  }

  LoadProfile profile_;
  net::WsUrl url_;
  std::mt19937_64 rng_;
  boost::asio::io_context io_;
  std::optional<boost::asio::executor_work_guard<boost::asio::io_context::executor_type>> work_;
  std::thread thread_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t pending_connects_ = 0;
  std::size_t opened_ = 0;
  std::size_t closed_ = 0;
  std::size_t resolved_ = 0;
  std::size_t acked_ = 0;
  bool io_done_ = false;
  std::vector<std::vector<VirtualClient>*> groups_;
};

LatencyReport collect(const LoadProfile& profile, const std::vector<VirtualClient>& clients) {
  LatencyReport r;
  r.kind = profile.kind;
  r.n_requests = profile.n_requests;
  r.concurrency = profile.concurrency;
  for (const auto& c : clients) {
    switch (c.outcome) {
      case Outcome::Accepted: r.samples_ms.push_back(c.latency_ms); break;
      case Outcome::Rejected: ++r.rejected_count; break;
      case Outcome::TimedOut:
      case Outcome::Pending: ++r.timeout_count; break;
    }
  }
  summarize(r);
  return r;
}

std::optional<Message> try_decode(std::string_view text) {
  try {
    return decode(text);
  } catch (const DecodeError&) {
    return std::nullopt;
  }
}

}  // namespace

LatencyReport run_registration(const LoadProfile& in) {
  LoadProfile profile = in;
  profile.kind = LoadKind::Registration;
  validate(profile);
  std::vector<VirtualClient> drivers;
  LatencyReport report;
  {
    Harness h(profile);
    h.track(drivers);
    h.make_clients(drivers, profile.n_requests, run_prefix() + "-reg-");
    h.connect_group(drivers, [&h](VirtualClient& c, std::string_view text) {
      const auto at = Clock::now();
      auto msg = try_decode(text);
      if (!msg) return;
      if (std::holds_alternative<Ack>(*msg)) {
        h.resolve(c, Outcome::Accepted, at);
      } else if (std::holds_alternative<ErrorReply>(*msg)) {
        h.resolve(c, Outcome::Rejected, at);
      }
    });
    h.fire_waves(drivers, [&h](VirtualClient& c) {
      std::string text = encode(DriverLocation{c.id, c.position, true});
      h.stamp_sent(c);
      c.ws->send(std::move(text));
    });
    report = collect(profile, drivers);
  }
  return report;
}

LatencyReport run_booking(const LoadProfile& in, std::size_t fleet_size) {
  LoadProfile profile = in;
  profile.kind = LoadKind::Booking;
  validate(profile);
  std::vector<VirtualClient> fleet;
  std::vector<VirtualClient> customers;
  LatencyReport report;
  {
    Harness h(profile);
    h.track(fleet);
    h.track(customers);
    const std::string prefix = run_prefix();
    h.make_clients(fleet, fleet_size, prefix + "-drv-");
    h.make_clients(customers, profile.n_requests, prefix + "-cus-");

    h.connect_group(fleet, [&h](VirtualClient& c, std::string_view text) {
      auto msg = try_decode(text);
      if (!msg) return;
      if (std::holds_alternative<Ack>(*msg)) {
        h.mark_acked(c);
      } else if (const auto* offer = std::get_if<DispatchOffer>(&*msg)) {
        c.ws->send(encode(DispatchDecision{c.id, offer->customer, true}));
      }
    });
    for (auto& d : fleet) d.ws->send(encode(DriverLocation{d.id, d.position, true}));
    if (fleet_size > 0) {
      // Without --ack there is nothing to wait for; give the server a moment.
      if (h.wait_acks(1, std::chrono::seconds(1)) == 0) {
        spdlog::warn("bench: no registration acks; is the server running with --ack?");
        std::this_thread::sleep_for(std::chrono::milliseconds(200));
      } else if (h.wait_acks(fleet_size, profile.request_timeout) < fleet_size) {
        spdlog::warn("bench: not every fleet driver acknowledged registration");
      }
    }

    h.connect_group(customers, [&h](VirtualClient& c, std::string_view text) {
      const auto at = Clock::now();
      auto msg = try_decode(text);
      if (!msg) return;
      if (const auto* reply = std::get_if<BookingReply>(&*msg)) {
        h.resolve(c, reply->accepted ? Outcome::Accepted : Outcome::Rejected, at);
      } else if (std::holds_alternative<ErrorReply>(*msg)) {
        h.resolve(c, Outcome::Rejected, at);
      }
    });
    h.fire_waves(customers, [&h](VirtualClient& c) {
      c.ws->send(encode(CustomerLocation{c.id, c.position}));
      std::string text = encode(RideRequest{c.id, c.destination});
      h.stamp_sent(c);
      c.ws->send(std::move(text));
    });
    report = collect(profile, customers);
  }
  return report;
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(const std::string& field, const char* name) {
  T value{};
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
    throw std::runtime_error(std::string("bad ") + name + " in report row: '" + field + "'");
  }
  return value;
}

std::string samples_path(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  if (p.extension() == ".csv") p.replace_extension();
  return p.string() + ".samples.csv";
}

bool missing_or_empty(const std::string& path) {
  std::error_code ec;
  return !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
}

}  // namespace

void emit_report(const LatencyReport& report, const std::string& csv_path) {
  if (report.samples_ms.empty()) throw EmptyReport("report has no samples");

  const bool header = missing_or_empty(csv_path);
  std::ofstream out(csv_path, std::ios::app);
  if (!out) throw std::runtime_error("cannot open " + csv_path);
  if (header) out << kCsvHeader << '\n';
  out << to_string(report.kind) << ',' << report.n_requests << ',' << report.concurrency << ','
      << fmt_double(report.mean_ms) << ',' << fmt_double(report.median_ms) << ',' << fmt_double(report.p95_ms) << ','
      << fmt_double(report.p99_ms) << ',' << report.rejected_count << '\n';
  if (!out) throw std::runtime_error("write failed: " + csv_path);

  const std::string sp = samples_path(csv_path);
  const bool sample_header = missing_or_empty(sp);
  std::ofstream samples(sp, std::ios::app);
  if (!samples) throw std::runtime_error("cannot open " + sp);
  if (sample_header) samples << "kind,n_requests,index,latency_ms\n";
  for (std::size_t i = 0; i < report.samples_ms.size(); ++i) {
    samples << to_string(report.kind) << ',' << report.n_requests << ',' << i << ','
            << fmt_double(report.samples_ms[i]) << '\n';
  }
}

std::vector<ReportRow> read_report_csv(std::istream& in) {
  std::vector<ReportRow> rows;
  std::string line;
  if (!std::getline(in, line)) return rows;
  if (line != kCsvHeader) throw std::runtime_error("unexpected report header: " + line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 8) throw std::runtime_error("report row needs 8 fields: " + line);
    ReportRow row;
    row.kind = load_kind_from_string(f[0]);
    row.n_requests = parse_number<std::size_t>(f[1], "n_requests");
    row.concurrency = parse_number<std::size_t>(f[2], "concurrency");
    row.mean_ms = parse_number<double>(f[3], "mean_ms");
    row.median_ms = parse_number<double>(f[4], "median_ms");
    row.p95_ms = parse_number<double>(f[5], "p95_ms");
    row.p99_ms = parse_number<double>(f[6], "p99_ms");
    row.rejected = parse_number<std::size_t>(f[7], "rejected");
    rows.push_back(row);
  }
  return rows;
}

}  // namespace robotaxi::loadgen
