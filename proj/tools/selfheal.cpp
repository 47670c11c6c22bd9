// selfheal: replacement-device healing daemon and tools.
#include <atomic>
#include <csignal>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "selfheal/config.hpp"
#include "selfheal/experiment.hpp"
#include "selfheal/orchestrator.hpp"
#include "selfheal/snmp_client.hpp"
#include "selfheal/snmp_tables.hpp"
#include "selfheal/status_server.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kFatal = 3;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

selfheal::net::Endpoint daemon_endpoint(const std::string& config_path, const std::string& endpoint) {
  if (!config_path.empty()) {
    auto config = selfheal::load_config(config_path);
    if (!config.status_port) {
      throw selfheal::ConfigError(selfheal::ConfigError::Kind::Validation, "statusPort",
                                  "statusPort: not set, the daemon has no status channel");
    }
    return {"127.0.0.1", *config.status_port};
  }
  return selfheal::net::parse_endpoint(endpoint, 7161);
}

int cmd_run(const std::string& config_path) {
  auto config = selfheal::load_config(config_path);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  return selfheal::run_daemon(config, g_stop);
}

int cmd_query(const std::string& config_path, const std::string& endpoint, const std::string& command) {
  const auto ep = daemon_endpoint(config_path, endpoint);
  try {
    std::cout << selfheal::query_status(ep, command, selfheal::net::Timeout(2000));
  } catch (const selfheal::net::NetError& e) {
    std::cerr << "selfheal: daemon unreachable at " << ep.str() << ": " << e.what() << "\n";
    return kFatal;
  }
  return kOk;
}

int cmd_dump_table(const std::string& config_path) {
  auto config = selfheal::load_config(config_path);
  selfheal::snmp::SnmpClientOptions opts;
  opts.timeout = std::chrono::duration_cast<selfheal::net::Timeout>(config.snmp_timeout);
  opts.retries = config.snmp_retries;
  selfheal::snmp::SnmpClient client(config.switch_endpoint, config.community, opts);
  auto table = selfheal::snmp::retrieve_lookup_table(client, config.table_roots);
  std::cout << selfheal::snmp::format_lookup_table(table);
  return kOk;
}

int cmd_experiment(const std::string& scenario, std::string work_dir, bool show_events) {
  bool temp = false;
  if (work_dir.empty()) {
    work_dir = (std::filesystem::temp_directory_path() / ("selfheal-experiment-" + std::to_string(::getpid()))).string();
    temp = true;
  }
  std::filesystem::remove_all(std::filesystem::path(work_dir) / "snapshots");
  auto result = selfheal::run_experiment(scenario, work_dir);
  if (show_events) std::cout << selfheal::sim::format_report(result.report) << "\n";
  std::cout << result.table;
  std::cerr << "simulated " << selfheal::format_duration(result.report.simulated) << " in "
            << result.report.wall_seconds << " s wall\n";
  if (temp) std::filesystem::remove_all(work_dir);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-healing orchestrator for switch-attached devices"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run the monitoring and healing daemon");
  run->add_option("--config", config_path, "Configuration file")->required();

  std::string status_config, endpoint = "127.0.0.1:7161";
  auto* status = app.add_subcommand("status", "Print the daemon's status report");
  status->add_option("--config", status_config, "Read statusPort from this configuration file");
  status->add_option("--endpoint", endpoint, "Daemon status endpoint host:port");

  std::string table_config;
  bool from_daemon = false;
  auto* dump = app.add_subcommand("dump-table", "Print the switch lookup table");
  dump->add_option("--config", table_config, "Configuration file")->required();
  dump->add_flag("--from-daemon", from_daemon, "Ask the running daemon instead of walking the switch");

  std::string scenario, work_dir;
  bool show_events = false;
  auto* exp = app.add_subcommand("experiment", "Replay a swap-out scenario and tabulate heal times");
  exp->add_option("scenario", scenario, "Scenario file")->required();
  exp->add_option("--work-dir", work_dir, "Keep snapshots and state here");
  exp->add_flag("--events", show_events, "Print the event report before the table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(config_path);
    if (*status) return cmd_query(status_config, endpoint, "STATUS");
    if (*dump) return from_daemon ? cmd_query(table_config, endpoint, "TABLE") : cmd_dump_table(table_config);
    if (*exp) return cmd_experiment(scenario, work_dir, show_events);
  } catch (const selfheal::ConfigError& e) {
    std::cerr << "selfheal: config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const selfheal::sim::ScriptError& e) {
    std::cerr << "selfheal: scenario error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "selfheal: " << e.what() << "\n";
    return kFatal;
  }
  return kOk;
}
