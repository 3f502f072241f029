#include <doctest.h>

#include <atomic>
#include <sstream>
#include <thread>

#include "oracles.hpp"
#include "robotaxi/registry.hpp"

using namespace robotaxi;
using namespace robotaxi::registry;

namespace {

class NullStream final : public Stream {
 public:
  bool send(const protocol::Message&) override { return true; }
  bool is_open() const override { return true; }
};

const GeoPoint kP{35.228683, 126.844866};
const GeoPoint kQ{35.227139, 126.838194};

/// Tables compared by content, ignoring streams.
void check_same_tables(const Registry& a, const Registry& b) {
  const auto ca = a.customers();
  const auto cb = b.customers();
  REQUIRE(ca.size() == cb.size());
  for (std::size_t i = 0; i < ca.size(); ++i) {
    CHECK(ca[i].id == cb[i].id);
    CHECK(ca[i].origin == cb[i].origin);
    CHECK(ca[i].destination == cb[i].destination);
  }
  const auto da = a.drivers();
  const auto db = b.drivers();
  REQUIRE(da.size() == db.size());
  for (std::size_t i = 0; i < da.size(); ++i) {
    CHECK(da[i].id == db[i].id);
    CHECK(da[i].curr_location == db[i].curr_location);
    CHECK(da[i].is_available == db[i].is_available);
  }
  CHECK(a.counters().pickups == b.counters().pickups);
}

}  // namespace

TEST_CASE("customer upserts") {
  Registry r;
  r.upsert_customer("Itadf", kP, nullptr);
  CHECK(r.counters().customers == 1);
  r.set_destination("Itadf", kQ);
  r.upsert_customer("Itadf", kQ, nullptr);
  CHECK(r.counters().customers == 1);
  const auto c = r.find_customer("Itadf");
  REQUIRE(c);
  CHECK(c->origin == kQ);
  CHECK(c->destination == kQ);  // destination survives a location update
  CHECK_THROWS_AS(r.upsert_customer("", kP, nullptr), std::invalid_argument);
}

TEST_CASE("driver availability flag") {
  Registry r;
  r.upsert_driver("Jignesh", kP, true, nullptr);
  CHECK(r.find_driver("Jignesh")->is_available);
  r.upsert_driver("Jignesh", kQ, std::nullopt, nullptr);
  CHECK(r.find_driver("Jignesh")->is_available);
  CHECK(r.find_driver("Jignesh")->curr_location == kQ);
  r.set_availability("Jignesh", false);
  r.upsert_driver("Jignesh", kP, std::nullopt, nullptr);
  CHECK_FALSE(r.find_driver("Jignesh")->is_available);

  r.upsert_driver("New", kP, std::nullopt, nullptr);
  CHECK_FALSE(r.find_driver("New")->is_available);
  CHECK_FALSE(r.set_availability("ghost", true));
}

TEST_CASE("available drivers snapshot") {
  Registry r;
  CHECK(r.available_drivers().empty());
  r.upsert_driver("a", kP, false, nullptr);
  r.upsert_driver("b", kP, true, nullptr);
  r.upsert_driver("c", kP, false, nullptr);
  const auto avail = r.available_drivers();
  REQUIRE(avail.size() == 1);
  CHECK(avail[0].id == "b");
  std::size_t visited = 0;
  r.visit_available([&](const DriverRecord& d) {
    CHECK(d.id == "b");
    ++visited;
  });
  CHECK(visited == 1);
}

TEST_CASE("remove on disconnect honours the stream guard") {
  Registry r;
  auto old_stream = std::make_shared<NullStream>();
  auto new_stream = std::make_shared<NullStream>();
  r.upsert_driver("d", kP, true, old_stream);
  r.upsert_driver("d", kP, std::nullopt, new_stream);
  CHECK_FALSE(r.remove_on_disconnect("d", PeerKind::Driver, old_stream.get()));
  CHECK(r.find_driver("d"));
  CHECK(r.remove_on_disconnect("d", PeerKind::Driver, new_stream.get()));
  CHECK_FALSE(r.find_driver("d"));
  CHECK_FALSE(r.remove_on_disconnect("d", PeerKind::Driver));
  r.upsert_customer("c", kP, nullptr);
  CHECK(r.remove_on_disconnect("c", PeerKind::Customer));
  CHECK(r.counters().customers == 0);
}

TEST_CASE("pickup counter is monotone") {
  Registry r;
  CHECK(r.increment_pickups() == 1);
  CHECK(r.increment_pickups() == 2);
  CHECK(r.counters().pickups == 2);
}

TEST_CASE("concurrent upserts match a sequential replay of the log") {
  std::stringstream sink;
  EventLog log(sink);
  Registry live(&log);
  constexpr int kThreads = 8;
  constexpr int kPerThread = 125;
  std::vector<std::thread> workers;
  for (int t = 0; t < kThreads; ++t) {
    workers.emplace_back([&, t] {
      std::mt19937_64 rng(static_cast<std::uint64_t>(t));
      for (int i = 0; i < kPerThread; ++i) {
        const std::string id = "c" + std::to_string(t * kPerThread + i);
        live.upsert_customer(id, oracle::random_wire_point(rng), nullptr);
        live.upsert_driver("d" + std::to_string(t * kPerThread + i), oracle::random_wire_point(rng), i % 2 == 0,
                           nullptr);
        if (i % 3 == 0) live.set_destination(id, oracle::random_wire_point(rng));
        if (i % 5 == 0) live.set_availability("d" + std::to_string(t * kPerThread + i), i % 4 == 0);
        if (i % 7 == 0) live.increment_pickups();
        if (i % 11 == 0) live.remove_on_disconnect(id, PeerKind::Customer);
        // contend on a shared key as well
        live.upsert_driver("shared", oracle::random_wire_point(rng), std::nullopt, nullptr);
      }
    });
  }
  for (auto& w : workers) w.join();

  const auto counts = live.counters();
  CHECK(counts.drivers == kThreads * kPerThread + 1);
  Registry replayed;
  std::stringstream in(sink.str());
  CHECK(replay_event_log(in, replayed) > 0);
  check_same_tables(live, replayed);
}

TEST_CASE("1000 concurrent distinct upserts give 1000 rows") {
  Registry r;
  std::vector<std::thread> workers;
  for (int t = 0; t < 10; ++t) {
    workers.emplace_back([&r, t] {
      for (int i = 0; i < 100; ++i) r.upsert_customer(std::to_string(t) + ":" + std::to_string(i), kP, nullptr);
    });
  }
  for (auto& w : workers) w.join();
  CHECK(r.counters().customers == 1000);
}

TEST_CASE("snapshots taken during writes only contain fully written rows") {
  Registry r;
  std::atomic<bool> stop{false};
  std::atomic<std::size_t> torn{0};
  std::thread writer([&] {
    for (int k = 1; k <= 20000; ++k) {
      // Latitude and longitude encode the same k, so a torn row is detectable.
      const double v = static_cast<double>(k % 80);
      r.upsert_driver("d" + std::to_string(k % 50), GeoPoint{v, v * 2.0}, true, nullptr);
    }
    stop = true;
  });
  while (!stop) {
    for (const auto& d : r.available_drivers()) {
      if (d.curr_location.longitude_deg != d.curr_location.latitude_deg * 2.0) ++torn;
    }
  }
  writer.join();
  CHECK(torn == 0);
}
