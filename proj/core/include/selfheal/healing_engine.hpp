#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "selfheal/clock.hpp"
#include "selfheal/device_link.hpp"
#include "selfheal/event_log.hpp"
#include "selfheal/firmware_repository.hpp"
#include "selfheal/inventory.hpp"
#include "selfheal/matcher.hpp"
#include "selfheal/snapshot_store.hpp"

namespace selfheal {

// Matched -> CharacteristicsMapped -> FirmwareMapped -> ConfigurationMapped -> Healed,
// with Aborted reachable from any non-terminal stage.
enum class HealingStage { Matched, CharacteristicsMapped, FirmwareMapped, ConfigurationMapped, Healed, Aborted };

const char* to_string(HealingStage stage);
HealingStage parse_healing_stage(const std::string& text);

enum class AbortReason {
  ConduitTimeout,
  AddressConflict,
  CharacteristicsRejected,
  TransferFailure,
  RebootTimeout,
  VersionMismatchAfterReboot,
  ChecksumMismatch,
  ActivationRejected,
  FailedDeviceReturned,
  Interrupted,
};

const char* to_string(AbortReason reason);
AbortReason parse_abort_reason(const std::string& text);

struct HealingJob {
  std::uint64_t id = 0;
  MacAddress failed_mac;
  MacAddress candidate_mac;
  HealingStage stage = HealingStage::Matched;
  std::map<HealingStage, Duration> stage_timestamps;
  std::optional<AbortReason> abort_reason;
  std::optional<std::string> failure_reason;

  // Scheduling state for the current stage.
  int attempts = 0;
  Duration next_attempt_at{};
  bool awaiting_reboot = false;
  Duration reboot_deadline{};

  Duration candidate_discovered_at{};
  std::uint64_t firmware_bytes = 0;
  std::uint64_t config_bytes = 0;

  bool terminal() const { return stage == HealingStage::Healed || stage == HealingStage::Aborted; }
};

struct HealingOptions {
  MatchPolicy match;
  int stage_retries = 3;
  Duration stage_backoff = std::chrono::seconds(1);
  Duration reboot_bound = std::chrono::seconds(20);
};

enum class StageOutcome { Advanced, Pending, Retry, Aborted };

// Matches failed devices to candidates and drives each job one stage per
// run_jobs() call. Only job candidates ever receive healing traffic.
class HealingEngine {
 public:
  HealingEngine(HealingOptions options, link::DeviceLink& link, const SnapshotStore& store,
                const FirmwareRepository& firmware, EventLog& log, const Clock& clock);

  void run_jobs(Inventory& inventory, std::uint64_t generation);

  // Stage steps, public so each can be exercised on its own.
  StageOutcome map_characteristics(HealingJob& job, const ConfigSnapshot& snapshot, Inventory& inventory);
  StageOutcome map_firmware(HealingJob& job, const ConfigSnapshot& snapshot, Inventory& inventory);
  StageOutcome map_configuration(HealingJob& job, const ConfigSnapshot& snapshot, Inventory& inventory);
  void finalize_heal(HealingJob& job, const ConfigSnapshot& snapshot, Inventory& inventory);

  // Creates a Matched job directly (the scheduler normally does this).
  HealingJob& start_job(const MacAddress& failed, const MacAddress& candidate, const ConfigSnapshot& snapshot,
                        Inventory& inventory);

  void abort_job(HealingJob& job, Inventory& inventory, AbortReason reason, const std::string& detail);

  const std::vector<HealingJob>& jobs() const { return jobs_; }
  HealingJob* find_job(std::uint64_t id);
  std::vector<HealingJob> active_jobs() const;

  // Restart support: reinstates persisted jobs; any that were mid-flight are
  // aborted as Interrupted and their candidates returned to the pool.
  void restore_jobs(std::vector<HealingJob> jobs, Inventory& inventory, std::uint64_t generation);

 private:
  void advance(HealingJob& job, HealingStage to);
  void step_job(HealingJob& job, Inventory& inventory);
  void log(const char* kind, std::vector<std::pair<std::string, std::string>> fields);

  HealingOptions options_;
  link::DeviceLink& link_;
  const SnapshotStore& store_;
  const FirmwareRepository& firmware_;
  EventLog& log_;
  const Clock& clock_;

  std::vector<HealingJob> jobs_;
  std::map<std::uint64_t, ConfigSnapshot> snapshots_;
  std::map<MacAddress, std::string> last_match_note_;
  std::map<MacAddress, Duration> rematch_after_;
  std::uint64_t next_job_id_ = 1;
  std::uint64_t generation_ = 0;
};

}  // namespace selfheal
