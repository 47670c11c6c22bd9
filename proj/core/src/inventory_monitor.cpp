#include "selfheal/inventory_monitor.hpp"

#include <algorithm>
#include <unordered_map>

namespace selfheal {

namespace {

std::unordered_map<MacAddress, snmp::BridgePort> presence(const SwitchLookupTable& table) {
  std::unordered_map<MacAddress, snmp::BridgePort> out;
  for (const auto& [port, row] : table.ports) {
    for (const auto& mac : row.macs) out.emplace(mac, port);
  }
  return out;
}

void log_event(EventLog* log, std::uint64_t gen, Duration now, const char* kind,
               std::vector<std::pair<std::string, std::string>> fields) {
  if (log != nullptr) log->append(gen, now, kind, std::move(fields));
}

bool has_eligible_failure(const Inventory& inventory, std::uint64_t discovered_at_generation) {
  for (const auto& [mac, rec] : inventory.records()) {
    if (rec.open_failure && rec.open_failure->detected_at_generation < discovered_at_generation) return true;
  }
  return false;
}

}  // namespace

InventoryDiff diff_tables(const SwitchLookupTable& prev, const SwitchLookupTable& next) {
  InventoryDiff diff;
  diff.generation = next.generation;
  const auto before = prev.pairs();
  const auto after = next.pairs();
  std::set_difference(after.begin(), after.end(), before.begin(), before.end(),
                      std::inserter(diff.added, diff.added.end()));
  std::set_difference(before.begin(), before.end(), after.begin(), after.end(),
                      std::inserter(diff.removed, diff.removed.end()));
  return diff;
}

std::set<PortMac> apply_diff(const std::set<PortMac>& prev, const InventoryDiff& diff) {
  std::set<PortMac> out;
  std::set_difference(prev.begin(), prev.end(), diff.removed.begin(), diff.removed.end(),
                      std::inserter(out, out.end()));
  out.insert(diff.added.begin(), diff.added.end());
  return out;
}

std::vector<FailureEvent> classify_failures(Inventory& inventory, const SwitchLookupTable& latest,
                                            const HeartbeatReport& heartbeats, int miss_threshold, Duration now,
                                            EventLog* log) {
  const auto gen = latest.generation;
  const auto present = presence(latest);
  std::vector<FailureEvent> events;

  for (const auto& mac : heartbeats.failed) {
    if (inventory.find(mac) == nullptr) {
      log_event(log, gen, now, "heartbeat_unknown_mac", {{"mac", mac.str()}});
    }
  }

  for (const auto& [mac, rec_const] : inventory.records()) {
    auto& rec = *inventory.find(mac);
    auto where = present.find(mac);
    const bool is_present = where != present.end();
    if (is_present) {
      rec.miss_count = 0;
      rec.last_seen_generation = gen;
    } else if (rec.status != DeviceStatus::Retired) {
      ++rec.miss_count;
    }

    switch (rec.status) {
      case DeviceStatus::Online: {
        if (is_present) {
          if (rec.port != where->second) {
            log_event(log, gen, now, "device_moved",
                      {{"mac", mac.str()},
                       {"from", rec.port ? std::to_string(*rec.port) : "-"},
                       {"to", std::to_string(where->second)}});
          }
          rec.port = where->second;
          if (heartbeats.failed.contains(mac)) {
            FailureEvent ev{mac, FailureCause::Reported, gen, now};
            inventory.set_status(mac, DeviceStatus::ReportedFailed);
            rec.open_failure = ev;
            events.push_back(ev);
            log_event(log, gen, now, "device_failed",
                      {{"mac", mac.str()}, {"cause", "Reported"}, {"port", std::to_string(*rec.port)}});
          }
        } else {
          if (rec.miss_count == 1) {
            log_event(log, gen, now, "device_lost",
                      {{"mac", mac.str()}, {"port", rec.port ? std::to_string(*rec.port) : "-"}});
          }
          if (rec.miss_count >= miss_threshold) {
            FailureEvent ev{mac, FailureCause::LinkLoss, gen, now};
            inventory.set_status(mac, DeviceStatus::Unreachable);
            rec.open_failure = ev;
            events.push_back(ev);
            log_event(log, gen, now, "device_failed",
                      {{"mac", mac.str()},
                       {"cause", "LinkLoss"},
                       {"port", rec.port ? std::to_string(*rec.port) : "-"},
                       {"missed", std::to_string(rec.miss_count)}});
          }
        }
        break;
      }
      case DeviceStatus::ReportedFailed:
        if (is_present && heartbeats.healthy.contains(mac)) {
          inventory.set_status(mac, DeviceStatus::Online);
          rec.open_failure.reset();
          rec.port = where->second;
          log_event(log, gen, now, "device_recovered", {{"mac", mac.str()}, {"port", std::to_string(where->second)}});
        }
        break;
      case DeviceStatus::Candidate:
        if (is_present) rec.port = where->second;
        break;
      default:
        break;
    }
  }
  return events;
}

CandidateUpdate update_candidates(Inventory& inventory, const InventoryDiff& diff, const SwitchLookupTable& latest,
                                  Duration now, EventLog* log) {
  const auto gen = diff.generation;
  const auto present = presence(latest);
  CandidateUpdate update;

  for (const auto& [port, mac] : diff.added) {
    if (const auto* rec = inventory.find(mac)) {
      if (rec->status == DeviceStatus::Retired) {
        log_event(log, gen, now, "retired_device_seen", {{"mac", mac.str()}, {"port", std::to_string(port)}});
      }
      continue;
    }
    DeviceRecord rec;
    rec.mac = mac;
    rec.port = port;
    rec.discovered_at_generation = gen;
    rec.last_seen_generation = gen;
    rec.discovered_at = now;
    if (has_eligible_failure(inventory, gen)) {
      rec.status = DeviceStatus::Candidate;
      inventory.add(std::move(rec));
      update.candidates.push_back(mac);
      log_event(log, gen, now, "candidate_enrolled", {{"mac", mac.str()}, {"port", std::to_string(port)}});
    } else {
      rec.status = DeviceStatus::Online;
      rec.needs_snapshot = true;
      inventory.add(std::move(rec));
      update.enrolled.push_back(mac);
      log_event(log, gen, now, "device_discovered", {{"mac", mac.str()}, {"port", std::to_string(port)}});
    }
  }

  std::vector<MacAddress> to_withdraw;
  for (const auto& [mac, rec_const] : inventory.records()) {
    auto& rec = *inventory.find(mac);
    auto where = present.find(mac);
    if (rec.status == DeviceStatus::Unreachable && where != present.end()) {
      inventory.set_status(mac, DeviceStatus::Online);
      rec.open_failure.reset();
      rec.port = where->second;
      rec.miss_count = 0;
      update.returned.push_back(mac);
      log_event(log, gen, now, "device_returned", {{"mac", mac.str()}, {"port", std::to_string(where->second)}});
    } else if (rec.status == DeviceStatus::Candidate && where == present.end()) {
      to_withdraw.push_back(mac);
    }
  }
  for (const auto& mac : to_withdraw) {
    inventory.erase(mac);
    update.withdrawn.push_back(mac);
    log_event(log, gen, now, "candidate_withdrawn", {{"mac", mac.str()}});
  }

  for (const auto& mac : inventory.with_status(DeviceStatus::Candidate)) {
    auto& rec = *inventory.find(mac);
    if (has_eligible_failure(inventory, rec.discovered_at_generation)) continue;
    inventory.set_status(mac, DeviceStatus::Online);
    rec.needs_snapshot = true;
    update.enrolled.push_back(mac);
    log_event(log, gen, now, "device_discovered",
              {{"mac", mac.str()}, {"port", rec.port ? std::to_string(*rec.port) : "-"}, {"from", "candidate"}});
  }
  return update;
}

Interrogation interrogate_device(link::DeviceLink& link, const MacAddress& mac) {
  auto reply = link.interrogate(mac);
  return Interrogation{reply.characteristics, reply.profile, reply.config_files, reply.config_revision};
}

HeartbeatReport probe_heartbeats(const Inventory& inventory, const SwitchLookupTable& latest, link::DeviceLink& link) {
  const auto present = presence(latest);
  HeartbeatReport report;
  for (const auto& [mac, rec] : inventory.records()) {
    if (rec.status != DeviceStatus::Online && rec.status != DeviceStatus::ReportedFailed) continue;
    if (!present.contains(mac)) continue;
    try {
      auto ack = link.heartbeat(mac);
      if (ack.status == 0) {
        report.healthy.insert(mac);
        report.config_revisions[mac] = static_cast<std::uint32_t>(ack.value);
      } else {
        report.failed.insert(mac);
      }
    } catch (const link::ConduitError&) {
      report.failed.insert(mac);
    }
  }
  return report;
}

SnmpTableSource::SnmpTableSource(net::Endpoint agent, std::string community, snmp::TableRoots roots,
                                 snmp::SnmpClientOptions options)
    : client_(std::move(agent), std::move(community), options), roots_(std::move(roots)) {}

SwitchLookupTable SnmpTableSource::retrieve(snmp::RoundDiagnostics* diag) {
  return snmp::retrieve_lookup_table(client_, roots_, diag);
}

InventoryMonitor::InventoryMonitor(TableSource& source, MonitorOptions options, EventLog& log, const Clock& clock,
                                   std::uint64_t start_generation)
    : source_(source), options_(options), log_(log), clock_(clock), generation_(start_generation) {
  previous_.generation = start_generation;
}

PollOutcome InventoryMonitor::poll_once() {
  PollOutcome out;
  const auto now = clock_.now();
  try {
    out.table = source_.retrieve(&out.diagnostics);
  } catch (const snmp::SnmpError& e) {
    out.error = std::string(snmp::to_string(e.kind())) + ": " + e.what();
    if (e.kind() == snmp::SnmpError::Kind::Timeout) {
      ++consecutive_failures_;
      if (switch_reachable_ && consecutive_failures_ >= options_.switch_failure_threshold) {
        switch_reachable_ = false;
        log_.append(generation_, now, "switch_unreachable", {{"rounds", std::to_string(consecutive_failures_)}});
      }
    } else {
      log_.append(generation_, now, "round_error", {{"error", out.error}});
    }
    return out;
  } catch (const snmp::JoinConflict& e) {
    out.error = e.what();
    log_.append(generation_, now, "join_conflict", {{"mac", e.mac().str()}, {"error", out.error}});
    return out;
  }

  ++generation_;
  out.table.generation = generation_;
  out.table.retrieved_at = now;
  out.diff = diff_tables(previous_, out.table);
  previous_ = out.table;
  consecutive_failures_ = 0;
  if (!switch_reachable_) {
    switch_reachable_ = true;
    log_.append(generation_, now, "switch_recovered");
  }
  const auto& d = out.diagnostics;
  if (d.skipped_mac + d.skipped_port + d.skipped_iface > 0) {
    log_.append(generation_, now, "round_diagnostics",
                {{"skipped_mac", std::to_string(d.skipped_mac)},
                 {"skipped_port", std::to_string(d.skipped_port)},
                 {"skipped_iface", std::to_string(d.skipped_iface)}});
  }
  out.ok = true;
  return out;
}

}  // namespace selfheal
