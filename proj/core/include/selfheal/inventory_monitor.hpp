#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "selfheal/clock.hpp"
#include "selfheal/device_link.hpp"
#include "selfheal/event_log.hpp"
#include "selfheal/inventory.hpp"
#include "selfheal/snmp_tables.hpp"

namespace selfheal {

using snmp::PortMac;
using snmp::SwitchLookupTable;

struct InventoryDiff {
  std::set<PortMac> added;
  std::set<PortMac> removed;
  std::uint64_t generation = 0;
  bool empty() const { return added.empty() && removed.empty(); }
};

// Exact set difference over (port, mac) pairs.
InventoryDiff diff_tables(const SwitchLookupTable& prev, const SwitchLookupTable& next);
// prev minus removed, plus added.
std::set<PortMac> apply_diff(const std::set<PortMac>& prev, const InventoryDiff& diff);

// Result of probing devices over the conduit.
struct HeartbeatReport {
  std::set<MacAddress> failed;   // no answer, or answered "faulted"
  std::set<MacAddress> healthy;
  std::map<MacAddress, std::uint32_t> config_revisions;
};

// Marks devices absent for `miss_threshold` consecutive generations as
// Unreachable (LinkLoss) and devices in `heartbeats.failed` as
// ReportedFailed. At most one open failure per device. Heartbeat MACs that
// are not in the inventory are ignored and logged.
std::vector<FailureEvent> classify_failures(Inventory& inventory, const SwitchLookupTable& latest,
                                            const HeartbeatReport& heartbeats, int miss_threshold, Duration now,
                                            EventLog* log = nullptr);

struct CandidateUpdate {
  std::vector<MacAddress> enrolled;    // new devices with no open failure before them
  std::vector<MacAddress> candidates;  // new devices discovered after a failure
  std::vector<MacAddress> returned;    // failed devices whose MAC came back
  std::vector<MacAddress> withdrawn;   // candidates that left the switch
};

// Applies diff.added to the inventory: returning failed MACs close their
// failure, new MACs become Candidates when some open failure was detected
// in an earlier generation, otherwise ordinary Online devices. Candidates
// left without any eligible failure are enrolled as Online.
CandidateUpdate update_candidates(Inventory& inventory, const InventoryDiff& diff, const SwitchLookupTable& latest,
                                  Duration now, EventLog* log = nullptr);

struct Interrogation {
  Characteristics characteristics;
  HardwareProfile profile;
  std::vector<std::string> config_files;
  std::uint32_t config_revision = 0;
};

// Throws link::ConduitError.
Interrogation interrogate_device(link::DeviceLink& link, const MacAddress& mac);

// Probes every Online or ReportedFailed device currently in `latest`.
HeartbeatReport probe_heartbeats(const Inventory& inventory, const SwitchLookupTable& latest, link::DeviceLink& link);

// Source of lookup tables; the SNMP implementation is the production one.
class TableSource {
 public:
  virtual ~TableSource() = default;
  virtual SwitchLookupTable retrieve(snmp::RoundDiagnostics* diag) = 0;
};

class SnmpTableSource final : public TableSource {
 public:
  SnmpTableSource(net::Endpoint agent, std::string community, snmp::TableRoots roots,
                  snmp::SnmpClientOptions options = {});
  SwitchLookupTable retrieve(snmp::RoundDiagnostics* diag) override;

 private:
  snmp::SnmpClient client_;
  snmp::TableRoots roots_;
};

struct MonitorOptions {
  // Consecutive timed-out rounds before the switch is reported unreachable.
  int switch_failure_threshold = 3;
};

struct PollOutcome {
  bool ok = false;
  SwitchLookupTable table;
  InventoryDiff diff;
  snmp::RoundDiagnostics diagnostics;
  std::string error;
};

// One logical polling loop over one switch. A failed round leaves the
// generation unchanged so failure detection freezes while the switch is
// unreachable.
class InventoryMonitor {
 public:
  InventoryMonitor(TableSource& source, MonitorOptions options, EventLog& log, const Clock& clock,
                   std::uint64_t start_generation = 0);

  PollOutcome poll_once();

  std::uint64_t generation() const { return generation_; }
  bool switch_reachable() const { return switch_reachable_; }
  int consecutive_failures() const { return consecutive_failures_; }
  const SwitchLookupTable& latest() const { return previous_; }

 private:
  TableSource& source_;
  MonitorOptions options_;
  EventLog& log_;
  const Clock& clock_;
  std::uint64_t generation_;
  SwitchLookupTable previous_;
  int consecutive_failures_ = 0;
  bool switch_reachable_ = true;
};

}  // namespace selfheal
