#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "selfheal/clock.hpp"
#include "selfheal/config.hpp"
#include "selfheal/firmware_repository.hpp"
#include "selfheal/orchestrator.hpp"
#include "selfheal/sim_device.hpp"
#include "selfheal/sim_switch.hpp"

// Scenario files (grammar in docs/scenario-format.md):
//
//   SET poll_period 100ms
//   DEVICE amp1 mac=02:00:00:00:00:01 type="Crown DCi" fw=1.2.0 addr=101 hw.channels=4 config.main="gain=3"
//   AT 0s attach 5 amp1
//   AT 2s detach amp1
//   AT 3s attach 5 amp1b
//   AT 3s advance 5s
namespace selfheal::sim {

class ScriptError : public std::runtime_error {
 public:
  ScriptError(int line, const std::string& what)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct DeviceDecl {
  SimDeviceSpec spec;
  int line = 0;
};

struct Action {
  Duration at{};
  std::string verb;
  std::vector<std::string> args;
  int line = 0;
};

struct Script {
  std::map<std::string, std::string> settings;
  std::vector<DeviceDecl> devices;
  std::vector<Action> actions;
  std::vector<std::pair<std::string, FirmwareVersion>> extra_firmware;

  Duration end_time() const;
  bool empty() const { return actions.empty(); }
};

// Splits on whitespace; double quotes group, with \n \t \" \\ escapes.
std::vector<std::string> tokenize(const std::string& line, int lineno = 0);

// Parses and fully validates, including replaying attachment state, so a
// bad script is rejected before anything runs. Throws ScriptError.
Script parse_script(const std::string& text);
Script load_script(const std::filesystem::path& path);

// Endpoints of every simulated device, attached or not.
class SimResolver final : public link::EndpointResolver {
 public:
  void add(const SimDevice& device);
  std::optional<link::DeviceEndpoints> resolve(const MacAddress& mac) const override;

 private:
  std::map<MacAddress, link::DeviceEndpoints> table_;
};

// The simulated rig: one switch and its devices sharing a virtual clock.
class SimHarness {
 public:
  explicit SimHarness(const Script& script, std::string community = "public");

  VirtualClock& clock() { return clock_; }
  SimSwitch& sw() { return switch_; }
  SimDevice& device(const std::string& name_or_mac);
  const std::vector<std::unique_ptr<SimDevice>>& devices() const { return devices_; }
  const SimResolver& resolver() const { return resolver_; }
  const InMemoryFirmwareRepository& firmware() const { return firmware_; }
  InMemoryFirmwareRepository& firmware() { return firmware_; }

  // Attach/detach keep the device's reachability in step with the switch.
  void attach(std::int32_t port, SimDevice& device);
  void detach(SimDevice& device);

  void apply(const Action& action);

 private:
  VirtualClock clock_;
  SimSwitch switch_;
  std::vector<std::unique_ptr<SimDevice>> devices_;
  SimResolver resolver_;
  InMemoryFirmwareRepository firmware_;
};

struct Attachment {
  Duration at{};
  std::int32_t port = 0;
  std::string device;
  MacAddress mac;
};

struct HealTiming {
  std::uint64_t job = 0;
  MacAddress failed;
  MacAddress candidate;
  std::string candidate_name;
  std::int32_t port = 0;
  std::string device_type;
  Duration attached_at{};
  Duration healed_at{};
  Duration elapsed() const { return healed_at - attached_at; }
};

struct ScenarioReport {
  std::vector<Event> events;
  std::vector<HealTiming> heals;
  std::vector<Attachment> attachments;
  std::vector<HealingJob> jobs;
  Inventory final_inventory;
  Duration simulated{};
  double wall_seconds = 0.0;
  std::size_t ticks = 0;
};

// Report as text, one event per line without timestamps, then one line per
// heal. Identical for two runs of the same script under the virtual clock.
std::string format_report(const ScenarioReport& report);

struct RunOptions {
  std::filesystem::path work_dir;  // snapshots and state live here
  std::optional<std::filesystem::path> event_log;
  // Pace ticks against the wall clock instead of running flat out.
  bool real_time = false;
  // Called after every tick, for checks that need intermediate state.
  std::function<void(const Orchestrator&)> after_tick;
};

// Scenario defaults for the system under test: short real-time timeouts,
// since only the simulated devices sit behind them.
OrchestratorConfig scenario_config(const Script& script, const net::Endpoint& switch_endpoint,
                                   const std::string& community, const std::filesystem::path& work_dir);

// Owns the rig and a live orchestrator wired to it over loopback.
class ScenarioRunner {
 public:
  ScenarioRunner(Script script, RunOptions options);

  ScenarioReport run();

  SimHarness& harness() { return *harness_; }
  Orchestrator& orchestrator() { return *orchestrator_; }
  const OrchestratorConfig& config() const { return config_; }
  EventLog& log() { return *log_; }

 private:
  Script script_;
  RunOptions options_;
  std::unique_ptr<SimHarness> harness_;
  std::unique_ptr<EventLog> log_;
  OrchestratorConfig config_;
  std::unique_ptr<SnmpTableSource> source_;
  std::unique_ptr<Orchestrator> orchestrator_;
};

ScenarioReport run_scenario(const Script& script, const RunOptions& options);

}  // namespace selfheal::sim
