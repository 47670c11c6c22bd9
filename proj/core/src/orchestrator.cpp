#include "selfheal/orchestrator.hpp"

#include <iomanip>
#include <sstream>
#include <thread>

#include "selfheal/status_server.hpp"

namespace selfheal {

namespace {

std::optional<PersistedState> restore(const OrchestratorConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.snapshot_dir, ec);
  if (ec) throw FatalError("cannot create " + config.snapshot_dir.string() + ": " + ec.message());
  try {
    return load_state(config.snapshot_dir / "state.json");
  } catch (const StateFileError& e) {
    throw FatalError(e.what());
  }
}

std::set<snmp::BridgePort> ports_of(const SwitchLookupTable& t) {
  std::set<snmp::BridgePort> out;
  for (const auto& [p, _] : t.ports) out.insert(p);
  return out;
}

}  // namespace

HealingOptions healing_options(const OrchestratorConfig& config) {
  HealingOptions o;
  o.match.allow_cross_port = config.allow_cross_port;
  o.match.required_params = config.required_hardware_params;
  o.stage_retries = config.stage_retries;
  o.stage_backoff = config.stage_backoff;
  o.reboot_bound = config.reboot_bound();
  return o;
}

link::LinkOptions link_options(const OrchestratorConfig& config) {
  link::LinkOptions o;
  o.conduit_timeout = std::chrono::duration_cast<net::Timeout>(config.conduit_timeout);
  o.ftp.connect_timeout = std::chrono::duration_cast<net::Timeout>(config.ftp_timeout);
  o.ftp.io_timeout = std::chrono::duration_cast<net::Timeout>(config.ftp_timeout);
  return o;
}

std::string format_status(const StatusReport& r) {
  std::ostringstream out;
  out << "generation: " << r.generation << "\n";
  out << "switch: " << (r.switch_reachable ? "reachable" : "unreachable") << "\n";
  out << "devices: " << r.inventory_size << "\n";
  for (const auto& [status, n] : r.counts) out << "  " << std::left << std::setw(15) << to_string(status) << n << "\n";
  out << "open failures: " << r.open_failures.size() << "\n";
  for (const auto& f : r.open_failures) {
    out << "  " << f.mac.str() << " " << to_string(f.cause) << " since gen " << f.detected_at_generation << "\n";
  }
  out << "jobs: " << r.jobs.size() << "\n";
  for (const auto& j : r.jobs) {
    out << "  #" << j.id << " " << j.failed.str() << " <- " << j.candidate.str() << " " << to_string(j.stage);
    if (j.abort_reason) out << " (" << to_string(*j.abort_reason) << ")";
    out << "\n";
  }
  out << "recent events:\n";
  for (const auto& e : r.recent_events) out << "  " << to_json_line(e) << "\n";
  return out.str();
}

Orchestrator::Orchestrator(OrchestratorConfig config, OrchestratorServices services)
    : config_(std::move(config)),
      services_(services),
      link_(services.resolver, link_options(config_)),
      store_(config_.snapshot_dir, StoreOptions{config_.history_depth}),
      restored_(restore(config_)),
      monitor_(services.source, MonitorOptions{}, services.log, services.clock,
               restored_ ? restored_->generation : 0),
      engine_(healing_options(config_), link_, store_, services.firmware, services.log, services.clock) {
  if (restored_) {
    inventory_ = std::move(restored_->inventory);
    const auto jobs = std::move(restored_->jobs);
    log("state_restored", {{"devices", std::to_string(inventory_.size())}, {"jobs", std::to_string(jobs.size())}});
    engine_.restore_jobs(jobs, inventory_, monitor_.generation());
    restored_.reset();
  }
  publish();
}

void Orchestrator::log(const char* kind, std::vector<std::pair<std::string, std::string>> fields) {
  services_.log.append(monitor_.generation(), services_.clock.now(), kind, std::move(fields));
}

void Orchestrator::tick() {
  auto outcome = monitor_.poll_once();
  const auto now = services_.clock.now();
  HeartbeatReport heartbeats;
  if (outcome.ok) {
    if (config_.heartbeat) heartbeats = probe_heartbeats(inventory_, outcome.table, link_);
    classify_failures(inventory_, outcome.table, heartbeats, config_.miss_threshold, now, &services_.log);
    update_candidates(inventory_, outcome.diff, outcome.table, now, &services_.log);
    interrogate_candidates();
  }
  engine_.run_jobs(inventory_, monitor_.generation());
  if (outcome.ok) maintain_snapshots(heartbeats);
  persist();
  publish();
}

void Orchestrator::interrogate_candidates() {
  for (const auto& mac : inventory_.with_status(DeviceStatus::Candidate)) {
    auto& rec = *inventory_.find(mac);
    if (rec.profile && rec.characteristics) continue;
    const auto now = services_.clock.now();
    auto bo = interrogation_backoff_.find(mac);
    if (bo != interrogation_backoff_.end() && now < bo->second.second) continue;
    try {
      auto info = interrogate_device(link_, mac);
      interrogation_backoff_.erase(mac);
      rec.characteristics = info.characteristics;
      rec.profile = info.profile;
      log("candidate_interrogated", {{"mac", mac.str()},
                                     {"device_type", info.profile.device_type},
                                     {"firmware", info.profile.firmware_version.str()}});
    } catch (const link::ConduitError& e) {
      auto& [fails, next] = interrogation_backoff_[mac];
      fails = std::min(fails + 1, 4);
      next = now + config_.poll_period * (1 << fails);
      log("interrogation_failed", {{"mac", mac.str()}, {"error", e.what()}});
    }
  }
}

void Orchestrator::maintain_snapshots(const HeartbeatReport& heartbeats) {
  const auto& latest = monitor_.latest();
  for (const auto& mac : inventory_.with_status(DeviceStatus::Online)) {
    auto& rec = *inventory_.find(mac);
    if (!latest.port_of(mac)) continue;
    bool due = rec.needs_snapshot || !rec.snapshot_revision;
    if (auto rev = heartbeats.config_revisions.find(mac);
        rev != heartbeats.config_revisions.end() && rec.snapshot_revision && rev->second != *rec.snapshot_revision) {
      due = true;
    }
    if (due) take_snapshot(rec);
  }
}

void Orchestrator::take_snapshot(DeviceRecord& rec) {
  try {
    auto reply = link_.interrogate(rec.mac);
    std::vector<std::pair<std::string, Bytes>> files;
    for (const auto& name : reply.config_files) {
      files.emplace_back(name, link_.get_file(rec.mac, link::kConfigDir + name));
    }
    rec.characteristics = reply.characteristics;
    rec.profile = reply.profile;
    auto snap = store_.save_snapshot(rec, files, monitor_.generation());
    rec.snapshot_revision = reply.config_revision;
    rec.needs_snapshot = false;
    log("snapshot_taken", {{"mac", rec.mac.str()},
                           {"revision", std::to_string(reply.config_revision)},
                           {"files", std::to_string(files.size())},
                           {"config_digest", digest_hex(snap.config_digest())}});
  } catch (const link::ConduitError& e) {
    log("snapshot_deferred", {{"mac", rec.mac.str()}, {"error", e.what()}});
  } catch (const link::FtpError& e) {
    log("snapshot_deferred", {{"mac", rec.mac.str()}, {"error", e.what()}});
  } catch (const SnapshotError& e) {
    if (e.kind() == SnapshotError::Kind::StorageFailure) throw FatalError(e.what());
    log("snapshot_deferred", {{"mac", rec.mac.str()}, {"error", e.what()}});
  }
}

void Orchestrator::persist() {
  PersistedState state;
  state.generation = monitor_.generation();
  state.inventory = inventory_;
  state.jobs = engine_.jobs();
  try {
    save_state(state_path(), state);
  } catch (const StateFileError& e) {
    throw FatalError(e.what());
  }
  services_.log.flush();
}

void Orchestrator::publish() {
  StatusReport r;
  r.generation = monitor_.generation();
  r.switch_reachable = monitor_.switch_reachable();
  r.inventory_size = inventory_.size();
  r.counts = inventory_.counts();
  for (const auto& mac : inventory_.open_failures()) r.open_failures.push_back(*inventory_.find(mac)->open_failure);
  for (const auto& j : engine_.jobs()) r.jobs.push_back({j.id, j.failed_mac, j.candidate_mac, j.stage, j.abort_reason});
  r.recent_events = services_.log.recent(20);
  auto text = snmp::format_lookup_table(monitor_.latest());
  std::lock_guard lock(status_mu_);
  status_ = std::move(r);
  table_text_ = std::move(text);
}

StatusReport Orchestrator::status() const {
  std::lock_guard lock(status_mu_);
  return status_;
}

std::string Orchestrator::table_text() const {
  std::lock_guard lock(status_mu_);
  return table_text_;
}

int run_daemon(const OrchestratorConfig& config, const std::atomic<bool>& stop) {
  SteadyClock clock;
  std::unique_ptr<EventLog> log;
  if (config.event_log) {
    log = std::make_unique<EventLog>(*config.event_log);
  } else {
    log = std::make_unique<EventLog>();
  }
  snmp::SnmpClientOptions snmp_opts;
  snmp_opts.timeout = std::chrono::duration_cast<net::Timeout>(config.snmp_timeout);
  snmp_opts.retries = config.snmp_retries;
  SnmpTableSource source(config.switch_endpoint, config.community, config.table_roots, snmp_opts);
  link::StaticResolver resolver;
  if (config.device_map) resolver.load(*config.device_map);
  DirectoryFirmwareRepository firmware(config.firmware_dir.value_or(config.snapshot_dir / "firmware"));

  Orchestrator orch(config, OrchestratorServices{source, resolver, firmware, *log, clock});
  std::unique_ptr<StatusServer> server;
  if (config.status_port) {
    server = std::make_unique<StatusServer>(*config.status_port, [&orch](const std::string& cmd) -> std::string {
      if (cmd == "STATUS") return format_status(orch.status());
      if (cmd == "TABLE") return orch.table_text();
      return "ERR unknown command\n";
    });
  }

  auto next = clock.now();
  while (!stop) {
    orch.tick();
    next += config.poll_period;
    while (!stop && clock.now() < next) {
      const auto left = next - clock.now();
      std::this_thread::sleep_for(std::min<Duration>(left, std::chrono::milliseconds(50)));
    }
  }
  log->append(orch.monitor().generation(), clock.now(), "shutdown");
  log->flush();
  return 0;
}

}  // namespace selfheal
