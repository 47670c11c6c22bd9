#include "selfheal/healing_engine.hpp"

#include <algorithm>
#include <stdexcept>

namespace selfheal {

namespace {

constexpr HealingStage kAllStages[] = {HealingStage::Matched,        HealingStage::CharacteristicsMapped,
                                       HealingStage::FirmwareMapped, HealingStage::ConfigurationMapped,
                                       HealingStage::Healed,         HealingStage::Aborted};

constexpr AbortReason kAllReasons[] = {
    AbortReason::ConduitTimeout,   AbortReason::AddressConflict,
    AbortReason::CharacteristicsRejected, AbortReason::TransferFailure,
    AbortReason::RebootTimeout,    AbortReason::VersionMismatchAfterReboot,
    AbortReason::ChecksumMismatch, AbortReason::ActivationRejected,
    AbortReason::FailedDeviceReturned, AbortReason::Interrupted};

std::string firmware_path(const ConfigSnapshot& snapshot) {
  return std::string(link::kFirmwareDir) + sanitize_device_type(snapshot.profile.device_type) + "-" +
         snapshot.profile.firmware_version.str() + ".fw";
}

}  // namespace

const char* to_string(HealingStage stage) {
  switch (stage) {
    case HealingStage::Matched: return "Matched";
    case HealingStage::CharacteristicsMapped: return "CharacteristicsMapped";
    case HealingStage::FirmwareMapped: return "FirmwareMapped";
    case HealingStage::ConfigurationMapped: return "ConfigurationMapped";
    case HealingStage::Healed: return "Healed";
    case HealingStage::Aborted: return "Aborted";
  }
  return "?";
}

HealingStage parse_healing_stage(const std::string& text) {
  for (auto s : kAllStages) {
    if (text == to_string(s)) return s;
  }
  throw std::invalid_argument("unknown healing stage " + text);
}

const char* to_string(AbortReason reason) {
  switch (reason) {
    case AbortReason::ConduitTimeout: return "ConduitTimeout";
    case AbortReason::AddressConflict: return "AddressConflict";
    case AbortReason::CharacteristicsRejected: return "CharacteristicsRejected";
    case AbortReason::TransferFailure: return "TransferFailure";
    case AbortReason::RebootTimeout: return "RebootTimeout";
    case AbortReason::VersionMismatchAfterReboot: return "VersionMismatchAfterReboot";
    case AbortReason::ChecksumMismatch: return "ChecksumMismatch";
    case AbortReason::ActivationRejected: return "ActivationRejected";
    case AbortReason::FailedDeviceReturned: return "FailedDeviceReturned";
    case AbortReason::Interrupted: return "Interrupted";
  }
  return "?";
}

AbortReason parse_abort_reason(const std::string& text) {
  for (auto r : kAllReasons) {
    if (text == to_string(r)) return r;
  }
  throw std::invalid_argument("unknown abort reason " + text);
}

HealingEngine::HealingEngine(HealingOptions options, link::DeviceLink& link, const SnapshotStore& store,
                             const FirmwareRepository& firmware, EventLog& log, const Clock& clock)
    : options_(std::move(options)), link_(link), store_(store), firmware_(firmware), log_(log), clock_(clock) {}

void HealingEngine::log(const char* kind, std::vector<std::pair<std::string, std::string>> fields) {
  log_.append(generation_, clock_.now(), kind, std::move(fields));
}

HealingJob* HealingEngine::find_job(std::uint64_t id) {
  for (auto& j : jobs_) {
    if (j.id == id) return &j;
  }
  return nullptr;
}

std::vector<HealingJob> HealingEngine::active_jobs() const {
  std::vector<HealingJob> out;
  for (const auto& j : jobs_) {
    if (!j.terminal()) out.push_back(j);
  }
  return out;
}

void HealingEngine::advance(HealingJob& job, HealingStage to) {
  job.stage = to;
  job.stage_timestamps[to] = clock_.now();
  job.attempts = 0;
  job.next_attempt_at = Duration::zero();
  log("stage_advanced", {{"job", std::to_string(job.id)}, {"candidate", job.candidate_mac.str()}, {"stage", to_string(to)}});
}

HealingJob& HealingEngine::start_job(const MacAddress& failed, const MacAddress& candidate,
                                     const ConfigSnapshot& snapshot, Inventory& inventory) {
  for (const auto& j : jobs_) {
    if (!j.terminal() && (j.failed_mac == failed || j.candidate_mac == candidate)) {
      throw std::logic_error("a job is already open for " + failed.str() + " or " + candidate.str());
    }
  }
  auto* cand = inventory.find(candidate);
  if (cand == nullptr) throw std::logic_error("unknown candidate " + candidate.str());
  inventory.set_status(candidate, DeviceStatus::Healing);

  HealingJob job;
  job.id = next_job_id_++;
  job.failed_mac = failed;
  job.candidate_mac = candidate;
  job.stage = HealingStage::Matched;
  job.stage_timestamps[HealingStage::Matched] = clock_.now();
  job.candidate_discovered_at = cand->discovered_at;
  snapshots_[job.id] = snapshot;
  jobs_.push_back(job);
  log("job_created", {{"job", std::to_string(job.id)},
                      {"failed", failed.str()},
                      {"candidate", candidate.str()},
                      {"port", cand->port ? std::to_string(*cand->port) : "-"}});
  return jobs_.back();
}

void HealingEngine::abort_job(HealingJob& job, Inventory& inventory, AbortReason reason, const std::string& detail) {
  if (job.terminal()) return;
  job.stage = HealingStage::Aborted;
  job.stage_timestamps[HealingStage::Aborted] = clock_.now();
  job.abort_reason = reason;
  job.failure_reason = detail;
  job.awaiting_reboot = false;
  snapshots_.erase(job.id);
  if (auto* cand = inventory.find(job.candidate_mac); cand != nullptr && cand->status == DeviceStatus::Healing) {
    inventory.set_status(job.candidate_mac, DeviceStatus::Candidate);
    // The device may be half-configured; learn its state afresh before reuse.
    cand->characteristics.reset();
    cand->profile.reset();
  }
  rematch_after_[job.failed_mac] = clock_.now() + options_.stage_backoff;
  log("job_aborted", {{"job", std::to_string(job.id)},
                      {"failed", job.failed_mac.str()},
                      {"candidate", job.candidate_mac.str()},
                      {"reason", to_string(reason)},
                      {"detail", detail}});
}

StageOutcome HealingEngine::map_characteristics(HealingJob& job, const ConfigSnapshot& snapshot, Inventory& inventory) {
  if (job.stage != HealingStage::Matched) throw std::logic_error("map_characteristics outside Matched");
  const auto wanted = snapshot.characteristics.device_address;
  for (const auto& [mac, rec] : inventory.records()) {
    if (mac == job.failed_mac || mac == job.candidate_mac) continue;
    if ((rec.status == DeviceStatus::Online || rec.status == DeviceStatus::Healing) && rec.characteristics &&
        rec.characteristics->device_address == wanted) {
      abort_job(job, inventory, AbortReason::AddressConflict,
                "device address " + std::to_string(wanted) + " held by " + mac.str());
      return StageOutcome::Aborted;
    }
  }
  try {
    link_.request(job.candidate_mac, link::SetCharacteristics{snapshot.characteristics});
  } catch (const link::ConduitError& e) {
    if (e.kind() == link::ConduitError::Kind::Nack) {
      abort_job(job, inventory, AbortReason::CharacteristicsRejected, e.what());
      return StageOutcome::Aborted;
    }
    job.failure_reason = e.what();
    return StageOutcome::Retry;
  }
  advance(job, HealingStage::CharacteristicsMapped);
  return StageOutcome::Advanced;
}

StageOutcome HealingEngine::map_firmware(HealingJob& job, const ConfigSnapshot& snapshot, Inventory& inventory) {
  if (job.stage != HealingStage::CharacteristicsMapped) throw std::logic_error("map_firmware out of order");
  auto* cand = inventory.find(job.candidate_mac);
  const auto now = clock_.now();

  if (job.awaiting_reboot) {
    link::InterrogateReply reply;
    try {
      reply = link_.interrogate(job.candidate_mac);
    } catch (const link::ConduitError& e) {
      if (now >= job.reboot_deadline) {
        abort_job(job, inventory, AbortReason::RebootTimeout, "device did not return after firmware update");
        return StageOutcome::Aborted;
      }
      return StageOutcome::Pending;
    }
    if (!(reply.profile.firmware_version == snapshot.profile.firmware_version)) {
      abort_job(job, inventory, AbortReason::VersionMismatchAfterReboot,
                "device reports " + reply.profile.firmware_version.str() + ", expected " +
                    snapshot.profile.firmware_version.str());
      return StageOutcome::Aborted;
    }
    if (cand != nullptr) cand->profile = reply.profile;
    job.awaiting_reboot = false;
    advance(job, HealingStage::FirmwareMapped);
    return StageOutcome::Advanced;
  }

  if (cand != nullptr && cand->profile && cand->profile->firmware_version == snapshot.profile.firmware_version) {
    advance(job, HealingStage::FirmwareMapped);
    return StageOutcome::Advanced;
  }

  auto image = firmware_.fetch(snapshot.profile.device_type, snapshot.profile.firmware_version);
  if (!image) {
    abort_job(job, inventory, AbortReason::TransferFailure,
              "no firmware image for " + snapshot.profile.device_type + " " + snapshot.profile.firmware_version.str());
    return StageOutcome::Aborted;
  }
  const auto path = firmware_path(snapshot);
  try {
    auto receipt = link_.put_file(job.candidate_mac, path, *image);
    job.firmware_bytes += image->size();
    if (receipt.digest != digest(*image) || receipt.byte_count != image->size()) {
      abort_job(job, inventory, AbortReason::ChecksumMismatch, "firmware readback differs from image");
      return StageOutcome::Aborted;
    }
  } catch (const link::FtpError& e) {
    abort_job(job, inventory, AbortReason::TransferFailure, std::string(link::to_string(e.kind())) + ": " + e.what());
    return StageOutcome::Aborted;
  }

  try {
    link_.request(job.candidate_mac, link::ActivateConfig{link::ActivationTarget::Firmware, {path}});
  } catch (const link::ConduitError& e) {
    if (e.kind() == link::ConduitError::Kind::Nack) {
      abort_job(job, inventory, AbortReason::ActivationRejected, e.what());
      return StageOutcome::Aborted;
    }
    job.failure_reason = e.what();
    return StageOutcome::Retry;
  }
  job.awaiting_reboot = true;
  job.reboot_deadline = now + options_.reboot_bound;
  log("firmware_sent", {{"job", std::to_string(job.id)},
                        {"candidate", job.candidate_mac.str()},
                        {"version", snapshot.profile.firmware_version.str()},
                        {"bytes", std::to_string(image->size())}});
  return StageOutcome::Pending;
}

StageOutcome HealingEngine::map_configuration(HealingJob& job, const ConfigSnapshot& snapshot, Inventory& inventory) {
  if (job.stage != HealingStage::FirmwareMapped) throw std::logic_error("map_configuration out of order");
  if (snapshot.config_files.empty()) {
    advance(job, HealingStage::ConfigurationMapped);
    return StageOutcome::Advanced;
  }

  std::vector<std::string> paths;
  for (const auto& f : snapshot.config_files) {
    const auto path = std::string(link::kConfigDir) + f.logical_name;
    try {
      auto receipt = link_.put_file(job.candidate_mac, path, f.bytes);
      job.config_bytes += f.bytes.size();
      if (receipt.digest != f.checksum || receipt.byte_count != f.bytes.size()) {
        abort_job(job, inventory, AbortReason::ChecksumMismatch, "readback of " + f.logical_name + " differs");
        return StageOutcome::Aborted;
      }
    } catch (const link::FtpError& e) {
      abort_job(job, inventory, AbortReason::TransferFailure,
                std::string(link::to_string(e.kind())) + ": " + e.what());
      return StageOutcome::Aborted;
    }
    paths.push_back(path);
  }

  link::ConduitMessage reply;
  try {
    reply = link_.request(job.candidate_mac, link::ActivateConfig{link::ActivationTarget::Configuration, paths});
  } catch (const link::ConduitError& e) {
    if (e.kind() == link::ConduitError::Kind::Nack) {
      abort_job(job, inventory, AbortReason::ActivationRejected, e.what());
      return StageOutcome::Aborted;
    }
    job.failure_reason = e.what();
    return StageOutcome::Retry;
  }
  const auto active = std::get<link::Ack>(reply.payload).value;
  if (active != snapshot.config_digest()) {
    abort_job(job, inventory, AbortReason::ChecksumMismatch,
              "active config digest " + digest_hex(active) + " != " + digest_hex(snapshot.config_digest()));
    return StageOutcome::Aborted;
  }
  advance(job, HealingStage::ConfigurationMapped);
  return StageOutcome::Advanced;
}

void HealingEngine::finalize_heal(HealingJob& job, const ConfigSnapshot& snapshot, Inventory& inventory) {
  if (job.stage != HealingStage::ConfigurationMapped) throw std::logic_error("finalize_heal out of order");
  auto* cand = inventory.find(job.candidate_mac);
  auto* failed = inventory.find(job.failed_mac);
  if (cand == nullptr || failed == nullptr) throw std::logic_error("job records missing from inventory");

  cand->characteristics = snapshot.characteristics;
  if (cand->profile) {
    cand->profile->firmware_version = snapshot.profile.firmware_version;
  } else {
    cand->profile = snapshot.profile;
  }
  cand->needs_snapshot = true;
  failed->open_failure.reset();
  inventory.set_status(job.failed_mac, DeviceStatus::Retired);
  inventory.set_status(job.candidate_mac, DeviceStatus::Online);

  advance(job, HealingStage::Healed);
  snapshots_.erase(job.id);
  const auto elapsed = job.stage_timestamps[HealingStage::Healed] - job.candidate_discovered_at;
  log("healed", {{"job", std::to_string(job.id)},
                 {"failed", job.failed_mac.str()},
                 {"candidate", job.candidate_mac.str()},
                 {"port", cand->port ? std::to_string(*cand->port) : "-"},
                 {"device_type", snapshot.profile.device_type},
                 {"device_address", std::to_string(snapshot.characteristics.device_address)},
                 {"elapsed_ns", std::to_string(elapsed.count())}});
}

void HealingEngine::step_job(HealingJob& job, Inventory& inventory) {
  const auto now = clock_.now();
  if (now < job.next_attempt_at) return;

  const auto* failed = inventory.find(job.failed_mac);
  if (failed == nullptr || !failed->open_failure) {
    abort_job(job, inventory, AbortReason::FailedDeviceReturned, "failure closed while healing");
    return;
  }
  auto snap = snapshots_.find(job.id);
  if (snap == snapshots_.end()) {
    abort_job(job, inventory, AbortReason::Interrupted, "snapshot no longer available");
    return;
  }

  StageOutcome outcome = StageOutcome::Pending;
  switch (job.stage) {
    case HealingStage::Matched: outcome = map_characteristics(job, snap->second, inventory); break;
    case HealingStage::CharacteristicsMapped: outcome = map_firmware(job, snap->second, inventory); break;
    case HealingStage::FirmwareMapped: outcome = map_configuration(job, snap->second, inventory); break;
    case HealingStage::ConfigurationMapped:
      finalize_heal(job, snap->second, inventory);
      outcome = StageOutcome::Advanced;
      break;
    default: break;
  }
  if (outcome == StageOutcome::Retry) {
    ++job.attempts;
    if (job.attempts > options_.stage_retries) {
      abort_job(job, inventory, AbortReason::ConduitTimeout,
                job.failure_reason.value_or("no reply") + " after " + std::to_string(job.attempts) + " attempts");
    } else {
      job.next_attempt_at = now + options_.stage_backoff;
      log("job_retry", {{"job", std::to_string(job.id)},
                        {"stage", to_string(job.stage)},
                        {"attempt", std::to_string(job.attempts)},
                        {"detail", job.failure_reason.value_or("")}});
    }
  }
}

void HealingEngine::run_jobs(Inventory& inventory, std::uint64_t generation) {
  generation_ = generation;
  const auto now = clock_.now();

  // Drive existing jobs first so a job never takes two steps in one call.
  for (auto& job : jobs_) {
    if (!job.terminal()) step_job(job, inventory);
  }

  std::set<MacAddress> failed_with_job;
  for (const auto& job : jobs_) {
    if (!job.terminal()) failed_with_job.insert(job.failed_mac);
  }

  // Oldest failures first, then by MAC.
  std::vector<const DeviceRecord*> open;
  for (const auto& mac : inventory.open_failures()) {
    if (!failed_with_job.contains(mac)) open.push_back(inventory.find(mac));
  }
  std::sort(open.begin(), open.end(), [](const DeviceRecord* a, const DeviceRecord* b) {
    return std::tie(a->open_failure->detected_at_generation, a->mac) <
           std::tie(b->open_failure->detected_at_generation, b->mac);
  });

  for (const auto* failed_const : open) {
    const auto failed_mac = failed_const->mac;
    if (auto it = rematch_after_.find(failed_mac); it != rematch_after_.end() && now < it->second) continue;

    std::vector<DeviceRecord> candidates;
    for (const auto& mac : inventory.with_status(DeviceStatus::Candidate)) candidates.push_back(*inventory.find(mac));
    if (candidates.empty()) continue;

    std::vector<std::string> diagnostics;
    ConfigSnapshot snapshot;
    try {
      snapshot = store_.load_latest_snapshot(failed_mac, &diagnostics);
    } catch (const SnapshotError& e) {
      const std::string note = std::string("snapshot:") + to_string(e.kind());
      if (last_match_note_[failed_mac] != note) {
        last_match_note_[failed_mac] = note;
        log("snapshot_missing", {{"mac", failed_mac.str()}, {"error", e.what()}});
      }
      continue;
    }
    for (const auto& d : diagnostics) log("snapshot_fallback", {{"mac", failed_mac.str()}, {"detail", d}});

    auto decision = select_replacement(*inventory.find(failed_mac), candidates, snapshot, options_.match);
    if (!decision.chosen) {
      std::string note;
      for (const auto& [mac, reason] : decision.rejected) note += mac.str() + "=" + to_string(reason) + " ";
      if (last_match_note_[failed_mac] != note) {
        last_match_note_[failed_mac] = note;
        log("match_failed", {{"failed", failed_mac.str()}, {"rejected", note}});
      }
      continue;
    }
    last_match_note_.erase(failed_mac);
    start_job(failed_mac, *decision.chosen, snapshot, inventory);
  }
}

void HealingEngine::restore_jobs(std::vector<HealingJob> jobs, Inventory& inventory, std::uint64_t generation) {
  generation_ = generation;
  for (auto& job : jobs) {
    next_job_id_ = std::max(next_job_id_, job.id + 1);
    jobs_.push_back(std::move(job));
    auto& j = jobs_.back();
    if (!j.terminal()) {
      abort_job(j, inventory, AbortReason::Interrupted, "orchestrator restarted during " + std::string(to_string(j.stage)));
    }
  }
}

}  // namespace selfheal
