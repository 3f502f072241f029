#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "robotaxi/loadgen.hpp"
#include "robotaxi/ws_server.hpp"

using namespace robotaxi;
using namespace robotaxi::loadgen;

namespace {

gateway::ServeConfig ack_config() {
  gateway::ServeConfig c;
  c.options.ack = true;
  return c;
}

LoadProfile profile(LoadKind kind, std::size_t n, std::size_t concurrency, const std::string& url) {
  LoadProfile p;
  p.kind = kind;
  p.n_requests = n;
  p.concurrency = concurrency;
  p.server_url = url;
  return p;
}

std::filesystem::path temp_csv(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("robotaxi_loadgen_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  auto p = dir / name;
  std::filesystem::remove(p);
  std::filesystem::remove(dir / (p.stem().string() + ".samples.csv"));
  return p;
}

// Independent percentile: smallest sample with at least p% of the data at or below it.
double percentile_by_count(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  for (double x : v) {
    const auto at_or_below = std::count_if(v.begin(), v.end(), [x](double y) { return y <= x; });
    if (100.0 * static_cast<double>(at_or_below) >= p * static_cast<double>(v.size())) return x;
  }
  return v.back();
}

}  // namespace

TEST_CASE("load kind names round-trip") {
  CHECK(load_kind_from_string("registration") == LoadKind::Registration);
  CHECK(load_kind_from_string("booking") == LoadKind::Booking);
  CHECK(to_string(LoadKind::Booking) == "booking");
  CHECK_THROWS_AS(load_kind_from_string("bogus"), std::invalid_argument);
}

TEST_CASE("profile validation") {
  CHECK_NOTHROW(validate(profile(LoadKind::Registration, 10, 10, "ws://127.0.0.1:1/chat")));
  CHECK_THROWS_AS(validate(profile(LoadKind::Registration, 0, 1, "ws://127.0.0.1:1/chat")), std::invalid_argument);
  CHECK_THROWS_AS(validate(profile(LoadKind::Registration, 10, 0, "ws://127.0.0.1:1/chat")), std::invalid_argument);
  CHECK_THROWS_AS(validate(profile(LoadKind::Registration, 10, 11, "ws://127.0.0.1:1/chat")), std::invalid_argument);
  CHECK_THROWS_AS(validate(profile(LoadKind::Registration, 10, 10, "")), std::invalid_argument);
}

TEST_CASE("nearest-rank percentiles agree with a counting oracle") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + rng() % 50);
    for (auto& x : v) x = std::round(u(rng));  // rounding creates ties
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (double p : {1.0, 50.0, 95.0, 99.0, 100.0}) {
      CHECK(nearest_rank(sorted, p) == percentile_by_count(v, p));
    }
  }
  CHECK(nearest_rank({1, 2, 3, 4}, 50.0) == 2.0);
  CHECK(nearest_rank({7}, 99.0) == 7.0);
}

TEST_CASE("summary statistics") {
  LatencyReport r;
  r.samples_ms = {4, 1, 3, 2};
  summarize(r);
  CHECK(r.mean_ms == doctest::Approx(2.5));
  CHECK(r.median_ms == 2.0);
  CHECK(r.p95_ms == 4.0);
  CHECK(r.p99_ms == 4.0);
}

TEST_CASE("single registration yields one sample") {
  gateway::RunningServer server(ack_config());
  const auto r = run_registration(profile(LoadKind::Registration, 1, 1, server.url()));
  CHECK(r.samples_ms.size() == 1);
  CHECK(r.rejected_count == 0);
  CHECK(r.timeout_count == 0);
  CHECK(r.conserved());
  CHECK(r.samples_ms[0] > 0.0);
}

TEST_CASE("registration load registers every driver") {
  gateway::RunningServer server(ack_config());
  const auto r = run_registration(profile(LoadKind::Registration, 200, 50, server.url()));
  CHECK(r.samples_ms.size() == 200);
  CHECK(r.conserved());
  CHECK(r.mean_ms <= r.p99_ms);
  CHECK(server.core().stats().drivers_registered == 200);
}

TEST_CASE("one customer and one driver yield one accepted booking") {
  gateway::RunningServer server(ack_config());
  const auto r = run_booking(profile(LoadKind::Booking, 1, 1, server.url()), 1);
  CHECK(r.samples_ms.size() == 1);
  CHECK(r.rejected_count == 0);
  CHECK(r.conserved());
}

TEST_CASE("half a fleet rejects half the bookings") {
  gateway::RunningServer server(ack_config());
  const auto r = run_booking(profile(LoadKind::Booking, 20, 20, server.url()), 10);
  CHECK(r.samples_ms.size() == 10);
  CHECK(r.rejected_count == 10);
  CHECK(r.timeout_count == 0);
  CHECK(r.conserved());
}

TEST_CASE("unreachable server fails to connect") {
  std::string url;
  {
    gateway::RunningServer s(ack_config());
    url = s.url();
  }
  CHECK_THROWS(run_registration(profile(LoadKind::Registration, 1, 1, url)));
}

TEST_CASE("report with no samples is refused") {
  LatencyReport r;
  r.n_requests = 3;
  r.rejected_count = 3;
  const auto path = temp_csv("empty.csv");
  CHECK_THROWS_AS(emit_report(r, path.string()), EmptyReport);
}

TEST_CASE("written report parses back to the in-memory values") {
  LatencyReport r;
  r.kind = LoadKind::Booking;
  r.n_requests = 5;
  r.concurrency = 5;
  r.samples_ms = {1.25, 0.1, 3.0000001, 2.5};
  r.rejected_count = 1;
  summarize(r);
  const auto path = temp_csv("roundtrip.csv");
  emit_report(r, path.string());
  r.kind = LoadKind::Registration;
  emit_report(r, path.string());

  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == kCsvHeader);
  in.seekg(0);
  const auto rows = read_report_csv(in);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].kind == LoadKind::Booking);
  CHECK(rows[1].kind == LoadKind::Registration);
  for (const auto& row : rows) {
    CHECK(row.n_requests == 5);
    CHECK(row.concurrency == 5);
    CHECK(row.mean_ms == r.mean_ms);
    CHECK(row.median_ms == r.median_ms);
    CHECK(row.p95_ms == r.p95_ms);
    CHECK(row.p99_ms == r.p99_ms);
    CHECK(row.rejected == 1);
  }

  std::ifstream samples(path.parent_path() / "roundtrip.samples.csv");
  std::string line;
  int lines = 0;
  while (std::getline(samples, line)) ++lines;
  CHECK(lines == 1 + 2 * 4);
}

TEST_CASE("malformed report rows are rejected") {
  std::istringstream bad(std::string(kCsvHeader) + "\nbooking,five,5,1,1,1,1,0\n");
  CHECK_THROWS_AS(read_report_csv(bad), std::runtime_error);
}
