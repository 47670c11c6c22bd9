#include "selfheal/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace selfheal {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void invalid(const std::string& key, const std::string& why) {
  throw ConfigError(ConfigError::Kind::Validation, key, key + ": " + why);
}

Duration duration_value(const std::string& key, const std::string& v) {
  try {
    return parse_duration(v);
  } catch (const std::invalid_argument&) {
    invalid(key, "expected a duration such as 250ms or 2s, got '" + v + "'");
  }
}

long long int_value(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long n = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    invalid(key, "expected an integer, got '" + v + "'");
  }
}

bool bool_value(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  invalid(key, "expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::filesystem::path path_value(const std::filesystem::path& base, const std::string& v) {
  std::filesystem::path p(v);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p;
}

}  // namespace

OrchestratorConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  OrchestratorConfig c;
  bool have_endpoint = false;
  bool have_community = false;

  using Setter = std::function<void(const std::string& key, const std::string& value)>;
  const std::map<std::string, Setter> setters = {
      {"switchEndpoint",
       [&](auto& k, auto& v) {
         try {
           c.switch_endpoint = net::parse_endpoint(v, 161);
         } catch (const std::invalid_argument& e) {
           invalid(k, e.what());
         }
         have_endpoint = true;
       }},
      {"community",
       [&](auto&, auto& v) {
         c.community = v;
         have_community = true;
       }},
      {"tableRoots",
       [&](auto& k, auto& v) {
         auto parts = split_list(v);
         if (parts.size() != 3) invalid(k, "expected three OIDs: mac table, port table, interface table");
         try {
           c.table_roots = {snmp::Oid::parse(parts[0]), snmp::Oid::parse(parts[1]), snmp::Oid::parse(parts[2])};
         } catch (const std::invalid_argument& e) {
           invalid(k, e.what());
         }
       }},
      {"pollPeriod", [&](auto& k, auto& v) { c.poll_period = duration_value(k, v); }},
      {"missThreshold", [&](auto& k, auto& v) { c.miss_threshold = static_cast<int>(int_value(k, v)); }},
      {"stageRetries", [&](auto& k, auto& v) { c.stage_retries = static_cast<int>(int_value(k, v)); }},
      {"rebootBoundMultiplier",
       [&](auto& k, auto& v) { c.reboot_bound_multiplier = static_cast<int>(int_value(k, v)); }},
      {"snapshotDir", [&](auto&, auto& v) { c.snapshot_dir = path_value(base_dir, v); }},
      {"historyDepth",
       [&](auto& k, auto& v) {
         auto n = int_value(k, v);
         if (n < 1) invalid(k, "must be at least 1");
         c.history_depth = static_cast<std::size_t>(n);
       }},
      {"allowCrossPort", [&](auto& k, auto& v) { c.allow_cross_port = bool_value(k, v); }},
      {"conduitTimeout", [&](auto& k, auto& v) { c.conduit_timeout = duration_value(k, v); }},
      {"ftpTimeout", [&](auto& k, auto& v) { c.ftp_timeout = duration_value(k, v); }},
      {"stageBackoff", [&](auto& k, auto& v) { c.stage_backoff = duration_value(k, v); }},
      {"snmpTimeout", [&](auto& k, auto& v) { c.snmp_timeout = duration_value(k, v); }},
      {"snmpRetries", [&](auto& k, auto& v) { c.snmp_retries = static_cast<int>(int_value(k, v)); }},
      {"heartbeat", [&](auto& k, auto& v) { c.heartbeat = bool_value(k, v); }},
      {"eventLog", [&](auto&, auto& v) { c.event_log = path_value(base_dir, v); }},
      {"statusPort",
       [&](auto& k, auto& v) {
         auto n = int_value(k, v);
         if (n < 1 || n > 65535) invalid(k, "must be a TCP port");
         c.status_port = static_cast<std::uint16_t>(n);
       }},
      {"deviceMap", [&](auto&, auto& v) { c.device_map = path_value(base_dir, v); }},
      {"firmwareDir", [&](auto&, auto& v) { c.firmware_dir = path_value(base_dir, v); }},
      {"requiredHardwareParams",
       [&](auto&, auto& v) {
         auto parts = split_list(v);
         c.required_hardware_params = std::set<std::string>(parts.begin(), parts.end());
       }},
  };

  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(ConfigError::Kind::Parse, "", "line " + std::to_string(lineno) + ": expected key = value");
    }
    const auto key = trim(t.substr(0, eq));
    const auto value = trim(t.substr(eq + 1));
    auto setter = setters.find(key);
    if (setter == setters.end()) {
      throw ConfigError(ConfigError::Kind::Parse, key, "line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      throw ConfigError(ConfigError::Kind::Parse, key, "line " + std::to_string(lineno) + ": repeated key '" + key + "'");
    }
    setter->second(key, value);
  }

  if (!have_endpoint) invalid("switchEndpoint", "required");
  if (!have_community) invalid("community", "required");
  validate_config(c);
  return c;
}

OrchestratorConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(ConfigError::Kind::Parse, "", "cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

void validate_config(const OrchestratorConfig& c) {
  if (c.community.empty()) invalid("community", "must not be empty");
  if (c.switch_endpoint.port == 0) invalid("switchEndpoint", "port must be non-zero");
  const std::pair<const char*, Duration> durations[] = {
      {"pollPeriod", c.poll_period},       {"conduitTimeout", c.conduit_timeout}, {"ftpTimeout", c.ftp_timeout},
      {"stageBackoff", c.stage_backoff},   {"snmpTimeout", c.snmp_timeout},
  };
  for (const auto& [key, d] : durations) {
    if (d <= Duration::zero()) invalid(key, "must be greater than zero");
  }
  if (c.miss_threshold < 1) invalid("missThreshold", "must be at least 1");
  if (c.stage_retries < 0) invalid("stageRetries", "must not be negative");
  if (c.reboot_bound_multiplier < 1) invalid("rebootBoundMultiplier", "must be at least 1");
  if (c.history_depth < 1) invalid("historyDepth", "must be at least 1");
  if (c.snmp_retries < 0) invalid("snmpRetries", "must not be negative");
  if (c.snapshot_dir.empty()) invalid("snapshotDir", "must not be empty");
}

std::string render_config(const OrchestratorConfig& c) {
  std::ostringstream out;
  out << "switchEndpoint = " << c.switch_endpoint.str() << "\n";
  out << "community = " << c.community << "\n";
  out << "tableRoots = " << c.table_roots.mac_table.str() << "," << c.table_roots.port_table.str() << ","
      << c.table_roots.iface_table.str() << "\n";
  out << "pollPeriod = " << format_duration(c.poll_period) << "\n";
  out << "missThreshold = " << c.miss_threshold << "\n";
  out << "stageRetries = " << c.stage_retries << "\n";
  out << "rebootBoundMultiplier = " << c.reboot_bound_multiplier << "\n";
  out << "snapshotDir = " << c.snapshot_dir.string() << "\n";
  out << "historyDepth = " << c.history_depth << "\n";
  out << "allowCrossPort = " << (c.allow_cross_port ? "true" : "false") << "\n";
  out << "conduitTimeout = " << format_duration(c.conduit_timeout) << "\n";
  out << "ftpTimeout = " << format_duration(c.ftp_timeout) << "\n";
  out << "stageBackoff = " << format_duration(c.stage_backoff) << "\n";
  out << "snmpTimeout = " << format_duration(c.snmp_timeout) << "\n";
  out << "snmpRetries = " << c.snmp_retries << "\n";
  out << "heartbeat = " << (c.heartbeat ? "true" : "false") << "\n";
  if (c.event_log) out << "eventLog = " << c.event_log->string() << "\n";
  if (c.status_port) out << "statusPort = " << *c.status_port << "\n";
  if (c.device_map) out << "deviceMap = " << c.device_map->string() << "\n";
  if (c.firmware_dir) out << "firmwareDir = " << c.firmware_dir->string() << "\n";
  if (c.required_hardware_params) {
    out << "requiredHardwareParams = ";
    bool first = true;
    for (const auto& p : *c.required_hardware_params) {
      out << (first ? "" : ",") << p;
      first = false;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace selfheal
