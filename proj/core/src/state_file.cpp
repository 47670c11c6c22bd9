#include "selfheal/state_file.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace selfheal {

using nlohmann::json;

namespace {

constexpr DeviceStatus kStatuses[] = {DeviceStatus::Online,  DeviceStatus::Unreachable, DeviceStatus::ReportedFailed,
                                      DeviceStatus::Healing, DeviceStatus::Retired,     DeviceStatus::Candidate};

DeviceStatus parse_status(const std::string& s) {
  for (auto st : kStatuses) {
    if (s == to_string(st)) return st;
  }
  throw StateFileError("unknown device status " + s);
}

json characteristics_json(const Characteristics& c) {
  return {{"device_address", c.device_address}, {"ip", c.ip_config.ip.str()}, {"dhcp", c.ip_config.dhcp_enabled}};
}

Characteristics characteristics_from(const json& j) {
  Characteristics c;
  c.device_address = j.at("device_address").get<std::uint32_t>();
  c.ip_config.ip = Ipv4::parse(j.at("ip").get<std::string>());
  c.ip_config.dhcp_enabled = j.at("dhcp").get<bool>();
  return c;
}

json profile_json(const HardwareProfile& p) {
  return {{"device_type", p.device_type},
          {"hardware_params", p.hardware_params},
          {"firmware_version", p.firmware_version.str()}};
}

HardwareProfile profile_from(const json& j) {
  HardwareProfile p;
  p.device_type = j.at("device_type").get<std::string>();
  p.hardware_params = j.at("hardware_params").get<std::map<std::string, std::string>>();
  p.firmware_version = FirmwareVersion::parse(j.at("firmware_version").get<std::string>());
  return p;
}

json record_json(const DeviceRecord& r) {
  json j = {{"mac", r.mac.str()},
            {"status", to_string(r.status)},
            {"last_seen_generation", r.last_seen_generation},
            {"discovered_at_generation", r.discovered_at_generation},
            {"discovered_at_ns", r.discovered_at.count()},
            {"miss_count", r.miss_count},
            {"needs_snapshot", r.needs_snapshot}};
  if (r.characteristics) j["characteristics"] = characteristics_json(*r.characteristics);
  if (r.profile) j["profile"] = profile_json(*r.profile);
  if (r.port) j["port"] = *r.port;
  if (r.snapshot_revision) j["snapshot_revision"] = *r.snapshot_revision;
  if (r.open_failure) {
    j["open_failure"] = {{"cause", to_string(r.open_failure->cause)},
                         {"detected_at_generation", r.open_failure->detected_at_generation},
                         {"detected_at_ns", r.open_failure->detected_at.count()}};
  }
  return j;
}

DeviceRecord record_from(const json& j) {
  DeviceRecord r;
  r.mac = MacAddress::parse(j.at("mac").get<std::string>());
  r.status = parse_status(j.at("status").get<std::string>());
  r.last_seen_generation = j.at("last_seen_generation").get<std::uint64_t>();
  r.discovered_at_generation = j.at("discovered_at_generation").get<std::uint64_t>();
  r.discovered_at = Duration(j.at("discovered_at_ns").get<std::int64_t>());
  r.miss_count = j.at("miss_count").get<int>();
  r.needs_snapshot = j.at("needs_snapshot").get<bool>();
  if (j.contains("characteristics")) r.characteristics = characteristics_from(j["characteristics"]);
  if (j.contains("profile")) r.profile = profile_from(j["profile"]);
  if (j.contains("port")) r.port = j["port"].get<std::int32_t>();
  if (j.contains("snapshot_revision")) r.snapshot_revision = j["snapshot_revision"].get<std::uint32_t>();
  if (j.contains("open_failure")) {
    const auto& f = j["open_failure"];
    const auto cause = f.at("cause").get<std::string>();
    r.open_failure = FailureEvent{r.mac, cause == "Reported" ? FailureCause::Reported : FailureCause::LinkLoss,
                                  f.at("detected_at_generation").get<std::uint64_t>(),
                                  Duration(f.at("detected_at_ns").get<std::int64_t>())};
  }
  return r;
}

json job_json(const HealingJob& job) {
  json stamps = json::object();
  for (const auto& [stage, at] : job.stage_timestamps) stamps[to_string(stage)] = at.count();
  json j = {{"id", job.id},
            {"failed", job.failed_mac.str()},
            {"candidate", job.candidate_mac.str()},
            {"stage", to_string(job.stage)},
            {"stage_timestamps_ns", stamps},
            {"candidate_discovered_at_ns", job.candidate_discovered_at.count()},
            {"firmware_bytes", job.firmware_bytes},
            {"config_bytes", job.config_bytes}};
  if (job.abort_reason) j["abort_reason"] = to_string(*job.abort_reason);
  if (job.failure_reason) j["failure_reason"] = *job.failure_reason;
  return j;
}

HealingJob job_from(const json& j) {
  HealingJob job;
  job.id = j.at("id").get<std::uint64_t>();
  job.failed_mac = MacAddress::parse(j.at("failed").get<std::string>());
  job.candidate_mac = MacAddress::parse(j.at("candidate").get<std::string>());
  job.stage = parse_healing_stage(j.at("stage").get<std::string>());
  for (const auto& [name, ns] : j.at("stage_timestamps_ns").items()) {
    job.stage_timestamps[parse_healing_stage(name)] = Duration(ns.get<std::int64_t>());
  }
  job.candidate_discovered_at = Duration(j.at("candidate_discovered_at_ns").get<std::int64_t>());
  job.firmware_bytes = j.at("firmware_bytes").get<std::uint64_t>();
  job.config_bytes = j.at("config_bytes").get<std::uint64_t>();
  if (j.contains("abort_reason")) job.abort_reason = parse_abort_reason(j["abort_reason"].get<std::string>());
  if (j.contains("failure_reason")) job.failure_reason = j["failure_reason"].get<std::string>();
  return job;
}

}  // namespace

std::string state_to_json(const PersistedState& state) {
  json records = json::array();
  for (const auto& [mac, rec] : state.inventory.records()) records.push_back(record_json(rec));
  json jobs = json::array();
  for (const auto& job : state.jobs) jobs.push_back(job_json(job));
  json root = {{"format", "selfheal-state/1"}, {"generation", state.generation}, {"devices", records}, {"jobs", jobs}};
  return root.dump(2) + "\n";
}

PersistedState state_from_json(const std::string& text) {
  try {
    const auto root = json::parse(text);
    if (root.at("format").get<std::string>() != "selfheal-state/1") throw StateFileError("unsupported state format");
    PersistedState state;
    state.generation = root.at("generation").get<std::uint64_t>();
    for (const auto& r : root.at("devices")) state.inventory.add(record_from(r));
    for (const auto& j : root.at("jobs")) state.jobs.push_back(job_from(j));
    return state;
  } catch (const StateFileError&) {
    throw;
  } catch (const std::exception& e) {
    throw StateFileError(std::string("corrupt state file: ") + e.what());
  }
}

void save_state(const std::filesystem::path& path, const PersistedState& state) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StateFileError("cannot write " + tmp.string());
    out << state_to_json(state);
    out.flush();
    if (!out) throw StateFileError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw StateFileError("cannot replace " + path.string() + ": " + ec.message());
}

std::optional<PersistedState> load_state(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  return state_from_json(ss.str());
}

}  // namespace selfheal
