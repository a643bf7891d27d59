// Command-line entry point: serve, script, bench, schedule, plus the
// hidden worker mode the server uses to spawn ranks.

#include <pthread.h>
#include <signal.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include "CLI11.hpp"
#include "steer/app/bench.hpp"
#include "steer/app/client.hpp"
#include "steer/app/config.hpp"
#include "steer/app/schedule_tool.hpp"
#include "steer/app/script.hpp"
#include "steer/app/server.hpp"
#include "steer/cluster/worker.hpp"
#include "steer/error.hpp"

namespace {

constexpr int kExitScript = 2;
constexpr int kExitStartup = 3;
constexpr int kExitBreach = 4;

int worker_main(int argc, char** argv) {
  sigset_t all;
  sigfillset(&all);
  pthread_sigmask(SIG_UNBLOCK, &all, nullptr);
  CLI::App app{"steer worker rank"};
  bool worker = false;
  std::uint32_t rank = 0;
  std::vector<std::size_t> band;
  std::string coordinator;
  app.add_flag("--worker", worker);
  app.add_option("--rank", rank)->required();
  app.add_option("--band", band, "<start> <rows>")->expected(2)->required();
  app.add_option("--coordinator", coordinator)->required();
  try {
    app.parse(argc, argv);
    steer::cluster::WorkerArgs args;
    args.rank = rank;
    args.band = {band[0], band[1]};
    args.coordinator = steer::protocol::Address::parse(coordinator);
    return steer::cluster::run_worker_process(args);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitStartup;
  } catch (const std::exception& e) {
    spdlog::error("worker: {}", e.what());
    return kExitStartup;
  }
}

/// Adds `--key` for every config key; values given on the command line
/// override the config file.
void add_config_flags(CLI::App* cmd, std::string& config_path,
                      std::map<std::string, std::string>& flags) {
  cmd->add_option("--config", config_path, "config file (`key = value` lines)");
  for (const auto& key : steer::app::Config::keys()) {
    cmd->add_option("--" + key, flags[key], "overrides `" + key + "`");
  }
}

steer::app::Config build_config(CLI::App* cmd, const std::string& path,
                                const std::map<std::string, std::string>& flags) {
  auto cfg = path.empty() ? steer::app::Config{} : steer::app::load_config(path);
  for (const auto& [key, value] : flags) {
    if (cmd->count("--" + key) > 0) cfg.set(key, value);
  }
  cfg.validate();
  return cfg;
}

int serve(const steer::app::Config& cfg) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  sigaddset(&set, SIGUSR1);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  std::unique_ptr<steer::app::Server> server;
  try {
    server = std::make_unique<steer::app::Server>(cfg);
  } catch (const steer::Error& e) {
    std::cerr << "startup error: " << e.what() << '\n';
    return kExitStartup;
  }
  std::cout << "listening on " << server->address().to_string() << std::endl;
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    if (sig != SIGUSR1) spdlog::info("signal {}: shutting down", sig);
    server->stop();
  });
  int rc = 0;
  try {
    server->run();
  } catch (const std::exception& e) {
    spdlog::error("server stopped: {}", e.what());
    rc = 1;
  }
  pthread_kill(waiter.native_handle(), SIGUSR1);
  waiter.join();
  server.reset();
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  // stdout carries results (transcripts, tables, the bound address).
  spdlog::set_default_logger(spdlog::stderr_color_mt("steer"));
  for (int i = 1; i < argc; ++i) {
    if (std::string_view(argv[i]) == "--worker") return worker_main(argc, argv);
  }
  CLI::App app{"Interactive steering server, scripted client, overhead bench and task scheduler"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "run the steering server");
  std::string serve_config;
  std::map<std::string, std::string> serve_flags;
  add_config_flags(serve_cmd, serve_config, serve_flags);

  // script
  auto* script_cmd = app.add_subcommand("script", "run a timed steering script against a server");
  std::string script_path, connect = "127.0.0.1:7420", transcript_path;
  bool websocket = false;
  int linger_ms = 1000;
  script_cmd->add_option("file", script_path, "script file")->required();
  script_cmd->add_option("--connect", connect, "server address");
  script_cmd->add_flag("--websocket", websocket, "tunnel through the /steer WebSocket");
  script_cmd->add_option("--linger-ms", linger_ms, "keep recording after the last action");
  script_cmd->add_option("--transcript", transcript_path, "write the transcript here as well");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "measure steering overhead on the reference solve");
  std::string bench_config, json_path;
  std::map<std::string, std::string> bench_flags;
  add_config_flags(bench_cmd, bench_config, bench_flags);
  double duration_s = 30.0, slot_ms = 1500.0;
  int reps = 5;
  std::vector<double> ticks{1.0, 2.0, 5.0};
  bench_cmd->add_option("--duration", duration_s, "seconds per repetition (all settings interleaved)");
  bench_cmd->add_option("--reps", reps, "repetitions; the median is reported");
  bench_cmd->add_option("--slot-ms", slot_ms, "length of one interleaved slot");
  bench_cmd->add_option("--ticks", ticks, "tick settings in ms")->delimiter(',');
  bench_cmd->add_option("--json", json_path, "also write the report as JSON");

  // schedule
  auto* sched_cmd = app.add_subcommand("schedule", "schedule a task tree into processor phases");
  steer::app::ScheduleToolOptions sopts;
  std::uint32_t octree = 0;
  double unit_cost = 0.0;
  auto* tree_opt = sched_cmd->add_option("--tree", sopts.tree_path, "tree file");
  auto* octree_opt = sched_cmd->add_option("--octree", octree, "complete octree of this depth");
  tree_opt->excludes(octree_opt);
  sched_cmd->add_option("-P,--processors", sopts.processors, "processor count")->required();
  sched_cmd->add_option("--unit-cost", unit_cost, "reference task size (default: median leaf)");
  sched_cmd->add_option("--csv", sopts.fullness_csv, "per-phase fullness CSV");
  sched_cmd->add_option("--occupancy", sopts.occupancy_csv, "occupancy chart CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitStartup;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*serve_cmd) {
      return serve(build_config(serve_cmd, serve_config, serve_flags));
    }
    if (*script_cmd) {
      const auto script = steer::app::Script::load(script_path);
      steer::app::ScriptOptions o;
      o.websocket = websocket;
      o.linger = std::chrono::milliseconds(linger_ms);
      steer::app::ScriptOutcome outcome;
      try {
        outcome = steer::app::run_script(script, steer::protocol::Address::parse(connect), o);
      } catch (const steer::Error& e) {
        std::cerr << "script error: " << e.what() << '\n';
        return kExitScript;
      }
      const auto text = steer::app::format_transcript(outcome.transcript);
      std::cout << text;
      if (!transcript_path.empty()) std::ofstream(transcript_path) << text;
      if (!outcome.ok) {
        std::cerr << "script failed: " << outcome.failure << '\n';
        return kExitScript;
      }
      return 0;
    }
    if (*bench_cmd) {
      const auto cfg = build_config(bench_cmd, bench_config, bench_flags);
      steer::app::BenchOptions o;
      o.ticks_ms = ticks;
      o.repetition = std::chrono::milliseconds(static_cast<std::int64_t>(duration_s * 1000));
      o.slot = std::chrono::milliseconds(static_cast<std::int64_t>(slot_ms));
      o.repetitions = reps;
      o.scenario = cfg.load_scenario();
      o.dims = cfg.levels.at(cfg.levels.finest());
      o.tolerance = cfg.tolerance;
      if (reps < 1 || o.slot.count() <= 0) throw steer::ConfigError("reps and slot must be positive");
      const auto report = steer::app::benchmark_overhead(o);
      std::cout << report.to_text();
      if (!json_path.empty()) std::ofstream(json_path) << report.to_json() << '\n';
      return report.breach ? kExitBreach : 0;
    }
    if (*sched_cmd) {
      if (*octree_opt) sopts.octree = octree;
      if (unit_cost > 0.0) sopts.unit_cost = unit_cost;
      if (!*octree_opt && sopts.tree_path.empty()) {
        throw steer::ConfigError("give --tree or --octree");
      }
      steer::app::run_schedule_tool(sopts, std::cout);
      return 0;
    }
  } catch (const steer::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStartup;
  }
  return 0;
}
