// In-process scenario runs shared by the simworld and acceptance tests.
#pragma once

#include <sstream>
#include <string>

#include "robotaxi/scenario.hpp"
#include "robotaxi/server_core.hpp"
#include "robotaxi/sim_links.hpp"
#include "robotaxi/simworld.hpp"

struct FastRun {
  robotaxi::sim::SimSummary summary;
  std::string event_log;
  std::vector<std::pair<std::string, std::string>> assignments;
  std::size_t available_drivers = 0;
  std::uint64_t server_pickups = 0;
  std::vector<robotaxi::sim::CustomerStatus> customer_status;
  std::vector<robotaxi::sim::AvAgent> avs_final;  // without links
};

/// Runs a scenario against an in-process server on a virtual clock.
inline FastRun run_fast(const robotaxi::sim::Scenario& scenario, robotaxi::sim::SimConfig config = {}) {
  using namespace robotaxi;
  FastRun out;
  std::ostringstream sink;
  EventLog log(sink);
  ManualScheduler clock;
  gateway::ServerCore core(clock);
  sim::InProcessLinkFactory links(core);
  {
    sim::SimWorld world(sim::build_graph(scenario), scenario.avs, scenario.customers, links, config, &log,
                        [&clock](Millis t) { clock.advance_to(t); });
    out.summary = world.run();
    out.assignments = world.assignments();
    for (const auto& c : world.customers()) out.customer_status.push_back(c.status);
    for (const auto& av : world.avs()) {
      sim::AvAgent copy;
      copy.driver_id = av.driver_id;
      copy.position = av.position;
      copy.status = av.status;
      copy.odometer_m = av.odometer_m;
      out.avs_final.push_back(std::move(copy));
    }
    out.available_drivers = core.registry().available_drivers().size();
    out.server_pickups = core.registry().counters().pickups;
  }
  log.flush();
  out.event_log = sink.str();
  return out;
}
