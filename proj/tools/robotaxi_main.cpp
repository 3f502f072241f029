// robotaxi: serve | sim | bench | validate-scenario

#include <csignal>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include <pthread.h>

#include <CLI11.hpp>
#include <boost/asio/executor_work_guard.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "robotaxi/config.hpp"
#include "robotaxi/loadgen.hpp"
#include "robotaxi/scenario.hpp"
#include "robotaxi/server_core.hpp"
#include "robotaxi/sim_links.hpp"
#include "robotaxi/simworld.hpp"
#include "robotaxi/ws_client.hpp"
#include "robotaxi/ws_server.hpp"

namespace {

using namespace robotaxi;

constexpr int kOk = 0;
constexpr int kRuntimeError = 1;
constexpr int kUsageError = 2;

struct ServeArgs {
  std::optional<std::string> config_file;
  std::map<std::string, std::string> flags;
};

/// Registers an optional flag whose value is forwarded to the config merge
/// only when the user supplied it.
void config_flag(CLI::App& cmd, ServeArgs& args, const std::string& key, const std::string& help) {
  std::string flag = "--" + key;
  for (auto& ch : flag) {
    if (ch == '_') ch = '-';
  }
  cmd.add_option_function<std::string>(
      flag, [&args, key](const std::string& v) { args.flags[key] = v; }, help);
}

void config_switch(CLI::App& cmd, ServeArgs& args, const std::string& key, const std::string& help) {
  cmd.add_flag_callback("--" + key, [&args, key] { args.flags[key] = "true"; }, help);
}

int cmd_serve(const ServeArgs& args) {
  Config config;
  try {
    config = load_config(args.config_file, args.flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsageError;
  }

  // Block termination signals before any io thread starts; sigwait below.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  std::unique_ptr<EventLog> log;
  if (!config.event_log.empty()) log = EventLog::open_file(config.event_log);

  std::unique_ptr<gateway::RunningServer> server;
  try {
    server = std::make_unique<gateway::RunningServer>(to_serve_config(config), log.get());
  } catch (const gateway::BindFailure& e) {
    std::cerr << "bind failed: " << e.what() << "\n";
    return kRuntimeError;
  }
  std::cout << "listening on " << server->url() << "\n"
            << "port: " << server->port() << std::endl;

  int sig = 0;
  sigwait(&signals, &sig);
  spdlog::info("signal {} received, shutting down", sig);
  server->stop();
  if (log) log->flush();
  std::cout << "stopped" << std::endl;
  return kOk;
}

struct SimArgs {
  std::string scenario;
  std::string server;
  bool in_process = false;
  std::string pacing = "fast";
  std::string event_log;
  bool await_acks = false;
  double dt_s = 1.0;
  double max_sim_time_s = 3600.0;
};

void print_summary(const sim::SimSummary& s) {
  std::cout << "pickups: " << s.pickups << "\n"
            << "rejections: " << s.rejections << "\n"
            << "aborted: " << s.aborted << "\n"
            << "sim duration: " << s.sim_duration_s << " s\n"
            << "completed: " << (s.completed ? "yes" : "no") << std::endl;
}

int cmd_sim(const SimArgs& args) {
  sim::Scenario scenario;
  try {
    scenario = sim::load_scenario(args.scenario);
  } catch (const sim::ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return kRuntimeError;
  }

  std::unique_ptr<EventLog> log;
  if (!args.event_log.empty()) log = EventLog::open_file(args.event_log);

  sim::SimConfig config;
  config.dt_s = args.dt_s;
  config.max_sim_time_s = args.max_sim_time_s;
  config.pacing = args.pacing == "realtime" ? sim::Pacing::RealTime : sim::Pacing::Fast;
  config.await_acks = args.await_acks;

  if (scenario.avs.empty() && scenario.customers.empty()) {
    print_summary(sim::SimSummary{0, 0, 0, 0.0, true});
    return kOk;
  }

  try {
    sim::SimSummary summary;
    if (args.in_process) {
      if (config.pacing == sim::Pacing::Fast) {
        ManualScheduler clock;
        gateway::ServerCore core(clock);
        sim::InProcessLinkFactory links(core);
        sim::SimWorld world(sim::build_graph(scenario), scenario.avs, scenario.customers, links, config, log.get(),
                            [&clock](Millis t) { clock.advance_to(t); });
        summary = world.run();
      } else {
        boost::asio::io_context io;
        auto work = boost::asio::make_work_guard(io);
        std::thread io_thread([&io] { io.run(); });
        {
          AsioScheduler clock(io);
          gateway::ServerCore core(clock);
          sim::InProcessLinkFactory links(core);
          {
            sim::SimWorld world(sim::build_graph(scenario), scenario.avs, scenario.customers, links, config,
                                log.get());
            summary = world.run();
          }
          core.shutdown();
          clock.cancel_all();
        }
        work.reset();
        io.stop();
        io_thread.join();
      }
    } else {
      sim::WsLinkFactory links(args.server);
      sim::SimWorld world(sim::build_graph(scenario), scenario.avs, scenario.customers, links, config, log.get());
      summary = world.run();
    }
    if (log) log->flush();
    print_summary(summary);
    return summary.completed ? kOk : kRuntimeError;
  } catch (const net::ConnectFailure& e) {
    std::cerr << "connect failed: " << e.what() << "\n";
    return kRuntimeError;
  }
}

struct BenchArgs {
  std::string kind;
  std::size_t n = 0;
  std::size_t concurrency = 0;
  std::size_t fleet = 0;
  bool fleet_set = false;
  std::string server;
  std::string out;
  double timeout_s = 10.0;
  std::uint64_t seed = 1;
};

int cmd_bench(const BenchArgs& args) {
  loadgen::LoadProfile profile;
  profile.kind = loadgen::load_kind_from_string(args.kind);
  profile.n_requests = args.n;
  profile.concurrency = args.concurrency == 0 ? args.n : args.concurrency;
  profile.server_url = args.server;
  profile.request_timeout = std::chrono::milliseconds(static_cast<long long>(args.timeout_s * 1000.0));
  profile.seed = args.seed;
  try {
    loadgen::validate(profile);
    net::parse_ws_url(profile.server_url);
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsageError;
  }

  loadgen::LatencyReport report;
  try {
    report = profile.kind == loadgen::LoadKind::Registration
                 ? loadgen::run_registration(profile)
                 : loadgen::run_booking(profile, args.fleet_set ? args.fleet : args.n);
  } catch (const net::ConnectFailure& e) {
    std::cerr << "connect failed: " << e.what() << "\n";
    return kRuntimeError;
  }

  std::cout << loadgen::to_string(report.kind) << " n=" << report.n_requests << " concurrency=" << report.concurrency
            << " samples=" << report.samples_ms.size() << " rejected=" << report.rejected_count
            << " timeouts=" << report.timeout_count << " mean_ms=" << report.mean_ms
            << " median_ms=" << report.median_ms << " p95_ms=" << report.p95_ms << " p99_ms=" << report.p99_ms
            << std::endl;

  if (!report.conserved()) {
    std::cerr << "conservation violated: samples + rejected + timeouts != n\n";
    return kRuntimeError;
  }
  if (!args.out.empty()) {
    try {
      loadgen::emit_report(report, args.out);
    } catch (const loadgen::EmptyReport& e) {
      std::cerr << "no report written: " << e.what() << "\n";
      return kRuntimeError;
    }
  }
  return kOk;
}

int cmd_validate(const std::string& path) {
  try {
    const auto sc = sim::load_scenario(path);
    std::cout << "ok: grid " << sc.grid.n << "x" << sc.grid.n << ", " << sc.avs.size() << " avs, "
              << sc.customers.size() << " customers" << std::endl;
    return kOk;
  } catch (const sim::ScenarioError& e) {
    std::cerr << "invalid scenario: " << e.what() << "\n";
    return kRuntimeError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ride-hailing dispatch server, fleet simulator and load generator"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the WebSocket dispatch server");
  serve_cmd->add_option_function<std::string>(
      "--config", [&serve](const std::string& v) { serve.config_file = v; }, "JSON config file");
  config_flag(*serve_cmd, serve, "bind", "Listen address");
  config_flag(*serve_cmd, serve, "port", "Listen port (0 picks a free port)");
  config_flag(*serve_cmd, serve, "threads", "io threads");
  config_flag(*serve_cmd, serve, "event_log", "Append JSON-lines events to this file");
  config_switch(*serve_cmd, serve, "monitor", "Accept monitor subscriptions");
  config_switch(*serve_cmd, serve, "ack", "Acknowledge location messages (benchmarks)");
  config_flag(*serve_cmd, serve, "offer_timeout_s", "Seconds a driver has to answer an offer");
  config_flag(*serve_cmd, serve, "max_retries", "Offers after the first before a booking is rejected");
  config_flag(*serve_cmd, serve, "tick_period_ms", "Relay update period");
  config_flag(*serve_cmd, serve, "pickup_radius_m", "Pickup arrival radius");
  config_flag(*serve_cmd, serve, "dropoff_radius_m", "Drop-off arrival radius");

  SimArgs sim_args;
  auto* sim_cmd = app.add_subcommand("sim", "Run a scenario against a server");
  sim_cmd->add_option("--scenario", sim_args.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  auto* server_opt = sim_cmd->add_option("--server", sim_args.server, "ws://host:port/chat");
  auto* inproc_opt = sim_cmd->add_flag("--in-process", sim_args.in_process, "Run the server in this process");
  server_opt->excludes(inproc_opt);
  sim_cmd->add_option("--pacing", sim_args.pacing, "fast|realtime")->check(CLI::IsMember({"fast", "realtime"}));
  sim_cmd->add_option("--event-log", sim_args.event_log, "Append agent events to this file");
  sim_cmd->add_flag("--await-acks", sim_args.await_acks, "Wait for location acks (server --ack)");
  sim_cmd->add_option("--dt", sim_args.dt_s, "Step length in seconds")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--max-sim-time", sim_args.max_sim_time_s, "Give up after this many simulated seconds")
      ->check(CLI::PositiveNumber);

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Measure registration or booking latency");
  bench_cmd->add_option("--kind", bench.kind, "registration|booking")
      ->required()
      ->check(CLI::IsMember({"registration", "booking"}));
  bench_cmd->add_option("--n", bench.n, "Requests")->required()->check(CLI::PositiveNumber);
  bench_cmd->add_option("--concurrency", bench.concurrency, "Requests in flight at once (default n)");
  bench_cmd->add_option("--fleet", bench.fleet, "Auto-accepting drivers for booking (default n)")
      ->each([&bench](const std::string&) { bench.fleet_set = true; });
  bench_cmd->add_option("--server", bench.server, "ws://host:port/chat")->required();
  bench_cmd->add_option("--out", bench.out, "Append a summary row to this CSV");
  bench_cmd->add_option("--timeout", bench.timeout_s, "Per-request deadline in seconds")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench.seed, "Seed for client positions");

  std::string scenario_path;
  auto* validate_cmd = app.add_subcommand("validate-scenario", "Check a scenario file");
  validate_cmd->add_option("scenario", scenario_path, "Scenario JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));
  spdlog::set_default_logger(spdlog::stderr_color_mt("robotaxi"));
  spdlog::set_level(spdlog::level::from_str(log_level));

  if (*sim_cmd && !sim_args.in_process && sim_args.server.empty()) {
    std::cerr << "sim: one of --server or --in-process is required\n";
    return kUsageError;
  }

  try {
    if (*serve_cmd) return cmd_serve(serve);
    if (*sim_cmd) return cmd_sim(sim_args);
    if (*bench_cmd) return cmd_bench(bench);
    if (*validate_cmd) return cmd_validate(scenario_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}
