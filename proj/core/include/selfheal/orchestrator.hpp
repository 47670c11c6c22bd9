#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "selfheal/clock.hpp"
#include "selfheal/config.hpp"
#include "selfheal/device_link.hpp"
#include "selfheal/event_log.hpp"
#include "selfheal/firmware_repository.hpp"
#include "selfheal/healing_engine.hpp"
#include "selfheal/inventory.hpp"
#include "selfheal/inventory_monitor.hpp"
#include "selfheal/snapshot_store.hpp"
#include "selfheal/state_file.hpp"

namespace selfheal {

// Unrecoverable condition; the daemon exits with status 3.
class FatalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct JobSummary {
  std::uint64_t id = 0;
  MacAddress failed;
  MacAddress candidate;
  HealingStage stage = HealingStage::Matched;
  std::optional<AbortReason> abort_reason;
};

struct StatusReport {
  std::uint64_t generation = 0;
  bool switch_reachable = true;
  std::size_t inventory_size = 0;
  std::map<DeviceStatus, std::size_t> counts;
  std::vector<FailureEvent> open_failures;
  std::vector<JobSummary> jobs;
  std::vector<Event> recent_events;
};

std::string format_status(const StatusReport& report);

// What the control loop talks to. The daemon wires production pieces; the
// scenario engine wires simulated ones.
struct OrchestratorServices {
  TableSource& source;
  const link::EndpointResolver& resolver;
  const FirmwareRepository& firmware;
  EventLog& log;
  const Clock& clock;
};

// One control loop: poll, detect, enroll, heal, snapshot, persist.
class Orchestrator {
 public:
  Orchestrator(OrchestratorConfig config, OrchestratorServices services);

  // One round. Throws FatalError on storage failure.
  void tick();

  // Thread-safe copies of the state after the last tick.
  StatusReport status() const;
  std::string table_text() const;

  const OrchestratorConfig& config() const { return config_; }
  const Inventory& inventory() const { return inventory_; }
  const HealingEngine& engine() const { return engine_; }
  const InventoryMonitor& monitor() const { return monitor_; }
  SnapshotStore& store() { return store_; }
  link::DeviceLink& device_link() { return link_; }
  std::filesystem::path state_path() const { return config_.snapshot_dir / "state.json"; }

 private:
  void interrogate_candidates();
  void maintain_snapshots(const HeartbeatReport& heartbeats);
  void take_snapshot(DeviceRecord& rec);
  void persist();
  void publish();
  void log(const char* kind, std::vector<std::pair<std::string, std::string>> fields);

  OrchestratorConfig config_;
  OrchestratorServices services_;
  link::DeviceLink link_;
  SnapshotStore store_;
  std::optional<PersistedState> restored_;
  // candidate -> (failures so far, next try)
  std::map<MacAddress, std::pair<int, Duration>> interrogation_backoff_;
  Inventory inventory_;
  InventoryMonitor monitor_;
  HealingEngine engine_;

  mutable std::mutex status_mu_;
  StatusReport status_;
  std::string table_text_;
};

HealingOptions healing_options(const OrchestratorConfig& config);
link::LinkOptions link_options(const OrchestratorConfig& config);

// Runs the production daemon until `stop` is set. Returns the exit status.
int run_daemon(const OrchestratorConfig& config, const std::atomic<bool>& stop);

}  // namespace selfheal
