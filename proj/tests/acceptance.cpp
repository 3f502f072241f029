// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "child_process.hpp"
#include "fuzz.hpp"
#include "oracles.hpp"
#include "recording_stream.hpp"
#include "robotaxi/dispatch.hpp"
#include "robotaxi/geo.hpp"
#include "robotaxi/loadgen.hpp"
#include "robotaxi/protocol.hpp"
#include "robotaxi/road_graph.hpp"
#include "robotaxi/scenario.hpp"
#include "robotaxi/server_core.hpp"
#include "robotaxi/ws_client.hpp"
#include "robotaxi/ws_server.hpp"
#include "sim_harness.hpp"

using namespace robotaxi;
using namespace std::chrono_literals;
using protocol::GeoPoint;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fixed(double v, int decimals = 3) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(decimals);
  s << v;
  return s.str();
}

double env_seconds(const char* name, double fallback) {
  if (const char* v = std::getenv(name)) {
    try {
      return std::stod(v);
    } catch (const std::exception&) {
    }
  }
  return fallback;
}

// 1. Wire codec conformance, round trip and fuzz.
Outcome protocol_conformance() {
  using namespace protocol;
  std::vector<std::string> problems;

  // The four reference strings, single quotes normalized to double quotes.
  const auto c = decode(R"({"ID":"Itadf","Type":"Customer","Origin":"35.228683, 126.844866"})");
  const auto r = decode(R"({"ID":"Itadf","Type":"Request","Destination":"35.227139, 126.838194"})");
  const auto d = decode(R"({"ID":"Jignesh","Type":"Driver","Location":"35.228683, 126.844866","Available":"True"})");
  const auto o = decode(R"({"Customer":"Itadf","Origin":"35.228683, 126.844866","Destination":"35.227139, 126.838194"})");
  const GeoPoint here{35.228683, 126.844866};
  const GeoPoint there{35.227139, 126.838194};
  if (std::get_if<CustomerLocation>(&c) == nullptr || std::get<CustomerLocation>(c) != CustomerLocation{"Itadf", here})
    problems.push_back("customer string");
  if (std::get_if<RideRequest>(&r) == nullptr || std::get<RideRequest>(r) != RideRequest{"Itadf", there})
    problems.push_back("request string");
  if (std::get_if<DriverLocation>(&d) == nullptr || std::get<DriverLocation>(d) != DriverLocation{"Jignesh", here, true})
    problems.push_back("driver string");
  if (std::get_if<DispatchOffer>(&o) == nullptr || std::get<DispatchOffer>(o) != DispatchOffer{"Itadf", here, there})
    problems.push_back("offer string");

  // Fixture corpus.
  std::ifstream in(std::string(FIXTURE_DIR) + "/conformance.json");
  const auto fixtures = nlohmann::json::parse(in);
  std::size_t fixture_failures = 0;
  for (const auto& f : fixtures) {
    const std::string input = f.at("input");
    try {
      const Message m = decode(input);
      if (f.contains("error") || variant_name(m) != f.at("variant").get<std::string>() ||
          encode(m) != f.at("canonical").get<std::string>()) {
        ++fixture_failures;
      }
    } catch (const DecodeError& e) {
      if (!f.contains("error") || error_code(e.code()) != f.at("error").get<std::string>()) ++fixture_failures;
    }
  }
  if (fixture_failures != 0) problems.push_back(std::to_string(fixture_failures) + " fixture mismatches");

  std::mt19937_64 rng(20240601);
  std::size_t round_trip_failures = 0;
  for (int i = 0; i < 10'000; ++i) {
    const Message m = oracle::random_message(rng);
    const std::string text = encode(m);
    try {
      if (decode(text) != m) ++round_trip_failures;
    } catch (const DecodeError&) {
      ++round_trip_failures;
    }
  }
  if (round_trip_failures != 0) problems.push_back(std::to_string(round_trip_failures) + " round-trip failures");

  const double fuzz_s = env_seconds("ROBOTAXI_FUZZ_SECONDS", 60.0);
  const auto fz = fuzz::run(std::chrono::milliseconds(static_cast<long long>(fuzz_s * 1000)), 7);
  if (fz.foreign_exceptions != 0) problems.push_back(std::to_string(fz.foreign_exceptions) + " non-DecodeError throws");
  if (fz.unstable != 0) problems.push_back(std::to_string(fz.unstable) + " unstable decodes");

  Outcome out;
  out.pass = problems.empty();
  out.detail = "4 reference strings, " + std::to_string(fixtures.size()) + " fixtures, 10000 round trips, fuzz " +
               fixed(fuzz_s, 0) + " s / " + std::to_string(fz.cases) + " cases (" + std::to_string(fz.rejected) +
               " rejected)";
  for (const auto& p : problems) out.detail += "; " + p;
  return out;
}

GeoPoint offset(const GeoPoint& p, double north_m, double east_m) {
  return geo::destination_point(geo::destination_point(p, 0.0, north_m), std::numbers::pi / 2, east_m);
}

// 2. Matching against a brute-force scan.
Outcome matching_oracle() {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<int> fleet_size(0, 100);
  std::uniform_int_distribution<int> cell(-4, 4);  // coarse lattice: many equal distances
  std::bernoulli_distribution available(0.7);
  int agree = 0, ties = 0;
  for (int instance = 0; instance < 1000; ++instance) {
    std::vector<registry::DriverRecord> fleet;
    std::map<double, int> distance_counts;
    const GeoPoint origin = offset(sim::kDefaultAnchor, 50.0 * cell(rng), 50.0 * cell(rng));
    const int n = fleet_size(rng);
    for (int i = 0; i < n; ++i) {
      registry::DriverRecord d;
      d.id = "drv" + std::to_string(rng() % 500);
      d.curr_location = offset(sim::kDefaultAnchor, 50.0 * cell(rng), 50.0 * cell(rng));
      d.is_available = available(rng);
      fleet.push_back(d);
      if (d.is_available) ++distance_counts[geo::haversine_distance(d.curr_location, origin)];
    }
    if (!distance_counts.empty() && distance_counts.begin()->second > 1) ++ties;
    if (dispatch::match(origin, fleet) == oracle::brute_force_match(origin, fleet)) ++agree;
  }
  return {agree == 1000, std::to_string(agree) + "/1000 agree, " + std::to_string(ties) + " with tied nearest"};
}

// 3. Seeded demo scenario, run twice.
Outcome end_to_end_scenario() {
  const auto scenario = sim::load_scenario(std::string(SCENARIO_DIR) + "/three_by_three.json");
  const FastRun a = run_fast(scenario);
  const FastRun b = run_fast(scenario);
  const bool all_done = std::all_of(a.customer_status.begin(), a.customer_status.end(),
                                    [](sim::CustomerStatus s) { return s == sim::CustomerStatus::Done; });
  const bool identical = !a.event_log.empty() && a.event_log == b.event_log;
  Outcome out;
  out.pass = a.summary.pickups == 3 && a.server_pickups == 3 && a.available_drivers == scenario.avs.size() &&
             all_done && a.customer_status.size() == 3 && identical;
  out.detail = "pickups " + std::to_string(a.summary.pickups) + " (server " + std::to_string(a.server_pickups) +
               "), available drivers " + std::to_string(a.available_drivers) + "/" +
               std::to_string(scenario.avs.size()) + ", customers done " + (all_done ? "yes" : "no") +
               ", logs identical " + (identical ? "yes" : "no") + " (" + std::to_string(a.event_log.size()) +
               " bytes), sim " + fixed(a.summary.sim_duration_s, 0) + " s";
  return out;
}

// 4. Relay cadence over a live WebSocket session on the wall clock.
Outcome relay_cadence() {
  gateway::ServeConfig config;
  gateway::RunningServer server(config);
  const GeoPoint pickup = sim::kDefaultAnchor;
  const GeoPoint parked = offset(pickup, 800.0, 0.0);  // far outside the pickup radius

  net::SyncClient driver, customer;
  driver.connect(server.url());
  customer.connect(server.url());
  driver.send(protocol::DriverLocation{"AV1", parked, true});
  for (int i = 0; i < 200 && server.core().registry().available_drivers().empty(); ++i) std::this_thread::sleep_for(5ms);
  customer.send(protocol::CustomerLocation{"C1", pickup});
  customer.send(protocol::RideRequest{"C1", offset(pickup, 0.0, 500.0)});
  if (!driver.receive_as<protocol::DispatchOffer>(5s)) return {false, "no offer"};
  driver.send(protocol::DispatchDecision{"AV1", "C1", true});
  if (!customer.receive_as<protocol::BookingReply>(5s)) return {false, "no booking reply"};

  const auto start = std::chrono::steady_clock::now();
  const auto window = 10s;
  std::this_thread::sleep_for(window);
  // Frames queue with their receive time; keep relays inside the window.
  auto relays_in_window = [&](net::SyncClient& client) {
    std::vector<double> t;
    for (const auto& f : client.drain()) {
      if (f.received_at - start > window) continue;
      try {
        if (std::holds_alternative<protocol::RelayUpdate>(protocol::decode(f.text))) {
          t.push_back(std::chrono::duration<double>(f.received_at - start).count());
        }
      } catch (const protocol::DecodeError&) {
      }
    }
    return t;
  };
  const auto to_customer = relays_in_window(customer);
  const auto to_driver = relays_in_window(driver);
  server.stop();

  auto gaps_ok = [](const std::vector<double>& t, int& good, int& total) {
    for (std::size_t i = 1; i < t.size(); ++i) {
      const double gap = t[i] - t[i - 1];
      ++total;
      if (gap >= 0.8 && gap <= 1.2) ++good;
    }
  };
  int good = 0, total = 0;
  gaps_ok(to_customer, good, total);
  gaps_ok(to_driver, good, total);
  const auto in_range = [](std::size_t n) { return n >= 9 && n <= 11; };
  const double share = total == 0 ? 0.0 : static_cast<double>(good) / total;
  Outcome out;
  out.pass = in_range(to_customer.size()) && in_range(to_driver.size()) && share >= 0.95;
  out.detail = "customer " + std::to_string(to_customer.size()) + ", driver " + std::to_string(to_driver.size()) +
               " relays in 10 s (want 10+-1); gaps within 1 s +-20%: " + std::to_string(good) + "/" +
               std::to_string(total) + " (" + fixed(100.0 * share, 1) + "%, want >= 95%)";
  return out;
}

// 5. Latency shape against a separate server process.
Outcome latency_shape() {
  const std::vector<std::size_t> ladder{100, 1000, 5000};
  constexpr int kRuns = 3;
  std::map<std::pair<int, std::size_t>, double> reg, book;
  std::string problems;

  auto with_server = [&](const std::function<void(const std::string&)>& body) {
    testproc::Child server({ROBOTAXI_BIN, "--log-level", "warn", "serve", "--port", "0", "--ack"});
    const auto line = server.read_line_containing("port: ", 10s);
    if (!line) throw std::runtime_error("server did not start: " + server.output());
    const std::string url = "ws://127.0.0.1:" + line->substr(line->find("port: ") + 6) + "/chat";
    body(url);
    server.signal(SIGINT);
    if (server.wait_exit(30s) != 0) throw std::runtime_error("server did not stop cleanly");
  };

  for (int run = 0; run < kRuns; ++run) {
    for (std::size_t n : ladder) {
      for (auto kind : {loadgen::LoadKind::Registration, loadgen::LoadKind::Booking}) {
        with_server([&](const std::string& url) {
          loadgen::LoadProfile p;
          p.kind = kind;
          p.n_requests = n;
          p.concurrency = n;
          p.server_url = url;
          p.seed = static_cast<std::uint64_t>(run * 100 + 1);
          const auto report =
              kind == loadgen::LoadKind::Registration ? loadgen::run_registration(p) : loadgen::run_booking(p, n);
          if (!report.conserved() || report.samples_ms.size() != n) {
            problems += " " + std::string(loadgen::to_string(kind)) + " n=" + std::to_string(n) + " samples " +
                        std::to_string(report.samples_ms.size()) + " rejected " +
                        std::to_string(report.rejected_count) + " timeouts " + std::to_string(report.timeout_count) +
                        ";";
          }
          (kind == loadgen::LoadKind::Registration ? reg : book)[{run, n}] = report.mean_ms;
        });
      }
    }
  }

  int monotone_runs = 0;
  bool dominance = true;
  std::string table;
  for (int run = 0; run < kRuns; ++run) {
    bool monotone = true;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
      const std::size_t n = ladder[i];
      if (i > 0 && reg[{run, n}] < reg[{run, ladder[i - 1]}]) monotone = false;
      if (book[{run, n}] < reg[{run, n}]) dominance = false;
      table += " r" + std::to_string(run) + "/n" + std::to_string(n) + " reg " + fixed(reg[{run, n}], 1) + " book " +
               fixed(book[{run, n}], 1) + ";";
    }
    if (monotone) ++monotone_runs;
  }
  Outcome out;
  out.pass = monotone_runs * 2 > kRuns && dominance && problems.empty();
  out.detail = "registration non-decreasing in " + std::to_string(monotone_runs) + "/3 runs, booking >= registration " +
               (dominance ? "always" : "NOT always") + "; mean ms:" + table + problems;
  return out;
}

// 6. Routing against exhaustive enumeration and brute-force snapping.
Outcome routing_oracle() {
  using namespace sim;
  std::mt19937_64 rng(6060);
  std::uniform_int_distribution<int> nodes(2, 10);
  std::uniform_real_distribution<double> bearing(0.0, 2 * std::numbers::pi);
  std::uniform_real_distribution<double> dist(0.0, 2000.0);
  std::bernoulli_distribution edge(0.35);
  const SearchPolicy wide{10.0, 2.0, 50'000.0};

  int route_agree = 0, unreachable = 0;
  for (int trial = 0; trial < 200; ++trial) {
    RoadGraph g;
    const int n = nodes(rng);
    for (int i = 0; i < n; ++i) g.add_node(geo::destination_point(kDefaultAnchor, bearing(rng), dist(rng)));
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        if (edge(rng)) g.add_edge(static_cast<NodeId>(a), static_cast<NodeId>(b));
      }
    }
    const GeoPoint from = geo::destination_point(kDefaultAnchor, bearing(rng), dist(rng));
    const GeoPoint to = geo::destination_point(kDefaultAnchor, bearing(rng), dist(rng));
    const NodeId s = snap_to_graph(from, g, wide).node;
    const NodeId t = snap_to_graph(to, g, wide).node;
    const auto graph_cost = oracle::enumerate_path_cost(g, s, t);
    if (!graph_cost) {
      try {
        plan_route(from, to, g, wide);
      } catch (const Unreachable&) {
        ++route_agree;
        ++unreachable;
      }
      continue;
    }
    const double expected =
        geo::haversine_distance(from, g.position(s)) + *graph_cost + geo::haversine_distance(g.position(t), to);
    const double got = plan_route(from, to, g, wide).length_m;
    if (std::abs(got - expected) <= 1e-9 * std::max(1.0, expected)) ++route_agree;
  }

  int snap_agree = 0;
  const RoadGraph grid = make_grid_graph(10, 100.0);
  std::uniform_real_distribution<double> far(0.0, 3000.0);
  for (int i = 0; i < 1000; ++i) {
    const GeoPoint p = geo::destination_point(kDefaultAnchor, bearing(rng), far(rng));
    double best = std::numeric_limits<double>::infinity();
    for (NodeId k = 0; k < grid.node_count(); ++k) best = std::min(best, geo::haversine_distance(grid.position(k), p));
    const SnapResult r = snap_to_graph(p, grid);
    if (geo::haversine_distance(grid.position(r.node), p) == best) ++snap_agree;
  }
  Outcome out;
  out.pass = route_agree == 200 && snap_agree == 1000;
  out.detail = "routes " + std::to_string(route_agree) + "/200 (" + std::to_string(unreachable) +
               " unreachable), snaps " + std::to_string(snap_agree) + "/1000";
  return out;
}

// 7. Distance identities and the reference pair.
Outcome geo_checks() {
  std::mt19937_64 rng(77);
  std::size_t failures = 0;
  for (int i = 0; i < 10'000; ++i) {
    const GeoPoint a = oracle::random_wire_point(rng);
    const GeoPoint b = oracle::random_wire_point(rng);
    if (geo::haversine_distance(a, b) != geo::haversine_distance(b, a)) ++failures;
    if (geo::haversine_distance(a, a) != 0.0) ++failures;
  }
  const double half = std::numbers::pi * geo::kEarthRadiusM;
  const double antipodal_a = geo::haversine_distance({0.0, 0.0}, {0.0, 180.0});
  const double antipodal_b = geo::haversine_distance({90.0, 0.0}, {-90.0, 0.0});
  const double antipodal_c = geo::haversine_distance({35.228683, 126.844866}, {-35.228683, -53.155134});
  const bool antipodal_exact = antipodal_a == half && antipodal_b == half;
  const bool antipodal_general = std::abs(antipodal_c - half) <= 1e-6 * half;

  const double d = geo::haversine_distance({35.228683, 126.844866}, {35.227139, 126.838194});
  const double rel = std::abs(d - oracle::kReferenceDistanceM) / oracle::kReferenceDistanceM;
  Outcome out;
  out.pass = failures == 0 && antipodal_exact && antipodal_general && rel <= 0.001;
  out.detail = "symmetry/zero failures " + std::to_string(failures) + "/20000, antipodal exact " +
               (antipodal_exact ? "yes" : "no") + ", reference pair " + fixed(d, 4) + " m vs oracle " +
               fixed(oracle::kReferenceDistanceM, 4) + " m (rel err " + fixed(rel * 100.0, 6) + "%, want <= 0.1%)";
  return out;
}

// 8. Randomized dispatch stress through the routing core on a virtual clock.
struct Peer {
  std::string id;
  std::shared_ptr<RecordingStream> stream;
  std::shared_ptr<gateway::Connection> conn;
  bool connected = true;
};

Outcome dispatch_stress() {
  using namespace protocol;
  ManualScheduler clock;
  gateway::ServerCore core(clock);
  std::mt19937_64 rng(8888);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> spread(-1500.0, 1500.0);
  auto random_point = [&] { return offset(sim::kDefaultAnchor, spread(rng), spread(rng)); };

  std::vector<Peer> drivers, customers;
  int next_driver = 0;
  auto open = [&](const std::string& id) {
    Peer p;
    p.id = id;
    p.stream = std::make_shared<RecordingStream>();
    p.conn = core.open(p.stream);
    return p;
  };
  auto add_driver = [&] {
    Peer p = open("drv" + std::to_string(next_driver++));
    p.conn->on_text(encode(DriverLocation{p.id, random_point(), true}));
    drivers.push_back(std::move(p));
  };
  auto disconnect = [](Peer& p) {
    p.stream->set_open(false);
    p.conn->on_close();
    p.connected = false;
  };
  for (int i = 0; i < 40; ++i) add_driver();

  // Per-driver pending offers and the customer each driver currently serves.
  std::map<std::string, std::vector<DispatchOffer>> offers;
  std::map<std::string, std::string> serving;  // driver -> customer, from BookingReply
  std::size_t double_bound = 0, accepted_replies = 0, rejected_replies = 0, completed_relays = 0;
  std::set<std::string> booked_customers;

  auto pump = [&] {
    for (auto& d : drivers) {
      for (auto& m : d.stream->take()) {
        if (auto* o = std::get_if<DispatchOffer>(&m)) offers[d.id].push_back(*o);
        if (auto* r = std::get_if<RelayUpdate>(&m); r && is_terminal(r->phase)) {
          if (r->phase == RidePhase::Completed) ++completed_relays;
          serving.erase(d.id);
        }
      }
    }
    for (auto& c : customers) {
      for (auto& m : c.stream->take()) {
        if (auto* r = std::get_if<BookingReply>(&m)) {
          if (!r->accepted) {
            ++rejected_replies;
            continue;
          }
          ++accepted_replies;
          const auto& drv = *r->driver_id;
          if (serving.count(drv) != 0 || booked_customers.count(c.id) != 0) ++double_bound;
          serving[drv] = c.id;
          booked_customers.insert(c.id);
        }
        if (auto* r = std::get_if<RelayUpdate>(&m); r && is_terminal(r->phase)) booked_customers.erase(c.id);
      }
    }
  };

  auto check_tables = [&] {
    std::set<std::string> ds, cs;
    for (const auto& s : core.dispatch().sessions()) {
      if (!ds.insert(s.driver_id).second || !cs.insert(s.customer_id).second) ++double_bound;
    }
  };

  int bookings = 0;
  while (bookings < 500) {
    const double roll = unit(rng);
    if (roll < 0.35) {
      Peer c = open("cus" + std::to_string(bookings++));
      const GeoPoint at = random_point();
      c.conn->on_text(encode(CustomerLocation{c.id, at}));
      c.conn->on_text(encode(RideRequest{c.id, random_point()}));
      customers.push_back(std::move(c));
    } else if (roll < 0.70) {
      // Answer some outstanding offers: accept, decline or stay silent.
      for (auto& d : drivers) {
        auto& pending = offers[d.id];
        if (!d.connected || pending.empty()) continue;
        const DispatchOffer o = pending.front();
        pending.erase(pending.begin());
        const double r = unit(rng);
        if (r < 0.6) {
          d.conn->on_text(encode(DispatchDecision{d.id, o.customer, true}));
        } else if (r < 0.85) {
          d.conn->on_text(encode(DispatchDecision{d.id, o.customer, false}));
        }
      }
    } else if (roll < 0.85) {
      // Drivers in a session jump to the pickup or the drop-off point.
      for (const auto& s : core.dispatch().sessions()) {
        auto it = std::find_if(drivers.begin(), drivers.end(), [&](const Peer& p) { return p.id == s.driver_id; });
        if (it == drivers.end() || !it->connected || unit(rng) < 0.5) continue;
        const GeoPoint target = s.phase == RidePhase::EnRouteToPickup ? s.origin : s.destination;
        it->conn->on_text(encode(DriverLocation{it->id, target, std::nullopt}));
      }
    } else if (roll < 0.92) {
      std::vector<Peer*> candidates;
      for (auto& d : drivers) {
        if (d.connected) candidates.push_back(&d);
      }
      if (!candidates.empty()) {
        disconnect(*candidates[rng() % candidates.size()]);
        add_driver();
      }
    } else if (roll < 0.97) {
      std::vector<Peer*> candidates;
      for (auto& c : customers) {
        if (c.connected) candidates.push_back(&c);
      }
      if (!candidates.empty()) disconnect(*candidates[rng() % candidates.size()]);
    } else {
      clock.advance_to(clock.now() + Millis(static_cast<long long>(unit(rng) * 6000)));
    }
    clock.advance_to(clock.now() + Millis(100));
    pump();
    check_tables();
  }

  // Quiesce: answer nothing more and let every handshake time out.
  for (int i = 0; i < 60; ++i) {
    clock.advance_to(clock.now() + 1s);
    pump();
    check_tables();
  }

  const auto stats = core.stats();
  const auto dstats = core.dispatch().stats();
  const std::size_t available = core.registry().available_drivers().size();
  const std::size_t in_session = core.dispatch().sessions().size();
  const bool conservation = available + in_session + stats.drivers_disconnected == stats.drivers_registered;
  const std::uint64_t pickups = core.registry().counters().pickups;
  const bool pickups_match = pickups == dstats.sessions_completed && pickups == completed_relays;
  const bool quiet = core.dispatch().pending_bookings() == 0;
  core.shutdown();

  Outcome out;
  out.pass = conservation && double_bound == 0 && dstats.invariant_violations == 0 && pickups_match && quiet;
  out.detail = "500 bookings: " + std::to_string(accepted_replies) + " accepted, " + std::to_string(rejected_replies) +
               " rejected, " + std::to_string(dstats.offers_declined) + " declines, " +
               std::to_string(dstats.offers_timed_out) + " timeouts, " + std::to_string(pickups) +
               " completed; conservation " + std::to_string(available) + "+" + std::to_string(in_session) + "+" +
               std::to_string(stats.drivers_disconnected) + " vs " + std::to_string(stats.drivers_registered) +
               " registered (" + (conservation ? "holds" : "BROKEN") + "), double-bound " +
               std::to_string(double_bound) + ", invariant violations " +
               std::to_string(dstats.invariant_violations);
  return out;
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"protocol conformance", protocol_conformance},
      {"matching oracle", matching_oracle},
      {"end-to-end scenario", end_to_end_scenario},
      {"relay cadence", relay_cadence},
      {"latency shape", latency_shape},
      {"routing oracle", routing_oracle},
      {"geo checks", geo_checks},
      {"dispatch safety", dispatch_stress},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first << "): " << o.detail
              << " [" << fixed(secs, 1) << " s]" << std::endl;
  }
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
