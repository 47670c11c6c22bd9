#include "selfheal/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace selfheal::sim {

namespace {

const std::set<std::string> kSettings = {
    "poll_period",  "miss_threshold", "stage_retries", "reboot_bound_multiplier", "stage_backoff", "conduit_timeout",
    "ftp_timeout",  "snmp_timeout",   "heartbeat",     "allow_cross_port",        "history_depth", "required_params",
    "community",
};

struct VerbShape {
  std::size_t min_args;
  std::size_t max_args;
};

const std::map<std::string, VerbShape> kVerbs = {
    {"attach", {2, 2}},        {"detach", {1, 1}},       {"crash", {1, 1}},
    {"recover", {1, 1}},       {"corrupt_next_transfer", {1, 1}},
    {"drop_ftp", {2, 2}},      {"mute", {1, 2}},         {"unmute", {1, 1}},
    {"nack_next", {1, 1}},     {"reboot_delay", {2, 2}}, {"report_fault", {1, 2}},
    {"change_config", {3, 3}}, {"switch_down", {0, 0}},  {"switch_up", {0, 0}},
    {"advance", {1, 1}},
};

Duration parse_time(const std::string& text, int line) {
  if (!text.empty() && std::all_of(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return std::chrono::seconds(std::stoll(text));
  }
  try {
    return parse_duration(text);
  } catch (const std::invalid_argument&) {
    throw ScriptError(line, "bad time '" + text + "'");
  }
}

bool parse_switch(const std::string& text, int line) {
  if (text == "on" || text == "true") return true;
  if (text == "off" || text == "false") return false;
  throw ScriptError(line, "expected on or off, got '" + text + "'");
}

std::int32_t parse_port(const std::string& text, int line) {
  try {
    std::size_t used = 0;
    const long p = std::stol(text, &used);
    if (used != text.size() || p < 1 || p > 65535) throw std::invalid_argument(text);
    return static_cast<std::int32_t>(p);
  } catch (const std::exception&) {
    throw ScriptError(line, "bad port '" + text + "'");
  }
}

DeviceDecl parse_device(const std::vector<std::string>& tok, int line) {
  if (tok.size() < 2) throw ScriptError(line, "DEVICE needs a name");
  DeviceDecl d;
  d.line = line;
  d.spec.name = tok[1];
  d.spec.reboot_delay = std::chrono::milliseconds(500);
  bool have_mac = false, have_type = false;
  for (std::size_t i = 2; i < tok.size(); ++i) {
    const auto eq = tok[i].find('=');
    if (eq == std::string::npos || eq == 0) throw ScriptError(line, "expected key=value, got '" + tok[i] + "'");
    const auto key = tok[i].substr(0, eq);
    const auto value = tok[i].substr(eq + 1);
    try {
      if (key == "mac") {
        d.spec.mac = MacAddress::parse(value);
        have_mac = true;
      } else if (key == "type") {
        if (value.empty()) throw ScriptError(line, "empty device type");
        d.spec.profile.device_type = value;
        have_type = true;
      } else if (key == "fw") {
        d.spec.profile.firmware_version = FirmwareVersion::parse(value);
      } else if (key == "addr") {
        d.spec.characteristics.device_address = static_cast<std::uint32_t>(std::stoul(value));
      } else if (key == "ip") {
        d.spec.characteristics.ip_config.ip = Ipv4::parse(value);
      } else if (key == "dhcp") {
        d.spec.characteristics.ip_config.dhcp_enabled = parse_switch(value, line);
      } else if (key == "reboot") {
        d.spec.reboot_delay = parse_time(value, line);
      } else if (key.rfind("hw.", 0) == 0 && key.size() > 3) {
        d.spec.profile.hardware_params[key.substr(3)] = value;
      } else if (key.rfind("config.", 0) == 0 && key.size() > 7) {
        d.spec.config_files[key.substr(7)] = to_bytes(value);
      } else {
        throw ScriptError(line, "unknown device attribute '" + key + "'");
      }
    } catch (const ScriptError&) {
      throw;
    } catch (const std::exception& e) {
      throw ScriptError(line, key + ": " + e.what());
    }
  }
  if (!have_mac) throw ScriptError(line, "DEVICE " + d.spec.name + " needs mac=");
  if (!have_type) throw ScriptError(line, "DEVICE " + d.spec.name + " needs type=");
  return d;
}

const DeviceDecl* find_decl(const Script& s, const std::string& ref) {
  for (const auto& d : s.devices) {
    if (d.spec.name == ref) return &d;
  }
  std::optional<MacAddress> mac;
  try {
    mac = MacAddress::parse(ref);
  } catch (const std::invalid_argument&) {
    return nullptr;
  }
  for (const auto& d : s.devices) {
    if (d.spec.mac == *mac) return &d;
  }
  return nullptr;
}

// Replays attachment state so impossible scripts fail before running.
void validate_actions(const Script& s) {
  std::set<MacAddress> attached;
  Duration last{};
  for (const auto& a : s.actions) {
    if (a.at < last) throw ScriptError(a.line, "time goes backwards");
    last = a.at;
    auto shape = kVerbs.find(a.verb);
    if (shape == kVerbs.end()) throw ScriptError(a.line, "unknown action '" + a.verb + "'");
    if (a.args.size() < shape->second.min_args || a.args.size() > shape->second.max_args) {
      throw ScriptError(a.line, a.verb + ": wrong number of arguments");
    }
    if (a.verb == "switch_down" || a.verb == "switch_up") continue;
    if (a.verb == "advance") {
      if (parse_time(a.args[0], a.line) <= Duration::zero()) throw ScriptError(a.line, "advance must be positive");
      continue;
    }
    const std::string& ref = a.verb == "attach" ? a.args[1] : a.args[0];
    const auto* decl = find_decl(s, ref);
    if (decl == nullptr) throw ScriptError(a.line, "unknown device '" + ref + "'");
    if (a.verb == "attach") {
      parse_port(a.args[0], a.line);
      if (!attached.insert(decl->spec.mac).second) {
        throw ScriptError(a.line, "DuplicateMac: " + decl->spec.name + " is already attached");
      }
    } else if (a.verb == "detach") {
      if (attached.erase(decl->spec.mac) == 0) {
        throw ScriptError(a.line, "UnknownMac: " + decl->spec.name + " is not attached");
      }
    } else if (a.verb == "crash") {
      if (!attached.contains(decl->spec.mac)) throw ScriptError(a.line, decl->spec.name + " is not attached");
    } else if (a.verb == "drop_ftp") {
      double f = -1;
      try {
        f = std::stod(a.args[1]);
      } catch (const std::exception&) {
      }
      if (f < 0.0 || f > 1.0) throw ScriptError(a.line, "drop fraction must be within 0..1");
    } else if (a.verb == "mute" || a.verb == "report_fault") {
      if (a.args.size() == 2) parse_switch(a.args[1], a.line);
    } else if (a.verb == "reboot_delay") {
      parse_time(a.args[1], a.line);
    }
  }
}

}  // namespace

Duration Script::end_time() const {
  Duration end{};
  for (const auto& a : actions) {
    auto t = a.at;
    if (a.verb == "advance") t += parse_time(a.args[0], a.line);
    end = std::max(end, t);
  }
  return end;
}

std::vector<std::string> tokenize(const std::string& line, int lineno) {
  std::vector<std::string> out;
  std::string cur;
  bool in_token = false, quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        quoted = false;
      } else if (c == '\\' && i + 1 < line.size()) {
        const char n = line[++i];
        cur += n == 'n' ? '\n' : n == 't' ? '\t' : n;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
      in_token = true;
    } else if (c == ' ' || c == '\t' || c == '\r') {
      if (in_token) out.push_back(std::move(cur));
      cur.clear();
      in_token = false;
    } else if (c == '#' && !in_token) {
      break;
    } else {
      cur += c;
      in_token = true;
    }
  }
  if (quoted) throw ScriptError(lineno, "unterminated quote");
  if (in_token) out.push_back(std::move(cur));
  return out;
}

Script parse_script(const std::string& text) {
  Script s;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  std::set<std::string> names;
  std::set<MacAddress> macs;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto tok = tokenize(raw, lineno);
    if (tok.empty()) continue;
    const auto& head = tok[0];
    if (head == "SET") {
      if (tok.size() != 3) throw ScriptError(lineno, "SET <key> <value>");
      if (!kSettings.contains(tok[1])) throw ScriptError(lineno, "unknown setting '" + tok[1] + "'");
      s.settings[tok[1]] = tok[2];
      if (tok[1] == "community") {
        if (tok[2].empty()) throw ScriptError(lineno, "empty community");
      } else {
        Script probe;
        probe.settings[tok[1]] = tok[2];
        try {
          scenario_config(probe, net::Endpoint{"127.0.0.1", 1}, "public", ".");
        } catch (const ConfigError& e) {
          throw ScriptError(lineno, e.what());
        }
      }
    } else if (head == "DEVICE") {
      if (!s.actions.empty()) throw ScriptError(lineno, "DEVICE lines must come before AT lines");
      auto d = parse_device(tok, lineno);
      if (!names.insert(d.spec.name).second) throw ScriptError(lineno, "duplicate device name " + d.spec.name);
      if (!macs.insert(d.spec.mac).second) throw ScriptError(lineno, "duplicate mac " + d.spec.mac.str());
      s.devices.push_back(std::move(d));
    } else if (head == "FIRMWARE") {
      if (tok.size() != 3) throw ScriptError(lineno, "FIRMWARE <type> <version>");
      try {
        s.extra_firmware.emplace_back(tok[1], FirmwareVersion::parse(tok[2]));
      } catch (const std::invalid_argument& e) {
        throw ScriptError(lineno, e.what());
      }
    } else if (head == "AT") {
      if (tok.size() < 3) throw ScriptError(lineno, "AT <time> <action> <args...>");
      Action a;
      a.at = parse_time(tok[1], lineno);
      a.verb = tok[2];
      a.args.assign(tok.begin() + 3, tok.end());
      a.line = lineno;
      s.actions.push_back(std::move(a));
    } else {
      throw ScriptError(lineno, "unknown directive '" + head + "'");
    }
  }
  validate_actions(s);
  try {
    scenario_config(s, net::Endpoint{"127.0.0.1", 161}, "public", "validate");
  } catch (const ConfigError& e) {
    throw ScriptError(0, std::string("setting ") + e.what());
  }
  return s;
}

Script load_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScriptError(0, "cannot read scenario " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_script(ss.str());
}

void SimResolver::add(const SimDevice& device) { table_[device.mac()] = device.endpoints(); }

std::optional<link::DeviceEndpoints> SimResolver::resolve(const MacAddress& mac) const {
  auto it = table_.find(mac);
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

SimHarness::SimHarness(const Script& script, std::string community) : switch_(std::move(community)) {
  std::set<std::pair<std::string, std::string>> images;
  for (const auto& d : script.devices) {
    auto dev = std::make_unique<SimDevice>(d.spec, clock_);
    dev->set_unplugged(true);
    resolver_.add(*dev);
    devices_.push_back(std::move(dev));
    images.emplace(d.spec.profile.device_type, d.spec.profile.firmware_version.str());
  }
  for (const auto& [type, ver] : script.extra_firmware) images.emplace(type, ver.str());
  for (const auto& [type, ver] : images) {
    const auto v = FirmwareVersion::parse(ver);
    firmware_.add(type, v, make_firmware_image(type, v));
  }
}

SimDevice& SimHarness::device(const std::string& ref) {
  for (auto& d : devices_) {
    if (d->name() == ref) return *d;
  }
  try {
    const auto mac = MacAddress::parse(ref);
    for (auto& d : devices_) {
      if (d->mac() == mac) return *d;
    }
  } catch (const std::invalid_argument&) {
  }
  throw ScriptError(0, "unknown device '" + ref + "'");
}

void SimHarness::attach(std::int32_t port, SimDevice& device) {
  switch_.attach(device.mac(), port);
  device.set_unplugged(false);
}

void SimHarness::detach(SimDevice& device) {
  switch_.detach(device.mac());
  device.set_unplugged(true);
}

void SimHarness::apply(const Action& a) {
  const auto& v = a.verb;
  if (v == "advance") return;
  if (v == "switch_down") return switch_.set_down(true);
  if (v == "switch_up") return switch_.set_down(false);
  if (v == "attach") return attach(parse_port(a.args[0], a.line), device(a.args[1]));
  auto& dev = device(a.args[0]);
  if (v == "detach") {
    detach(dev);
  } else if (v == "crash") {
    dev.crash();
  } else if (v == "recover") {
    dev.recover();
  } else if (v == "corrupt_next_transfer") {
    dev.corrupt_next_transfer();
  } else if (v == "drop_ftp") {
    dev.set_ftp_drop_fraction(std::stod(a.args[1]));
  } else if (v == "mute") {
    dev.set_muted(a.args.size() < 2 || parse_switch(a.args[1], a.line));
  } else if (v == "unmute") {
    dev.set_muted(false);
  } else if (v == "nack_next") {
    dev.nack_next();
  } else if (v == "reboot_delay") {
    dev.set_reboot_delay(parse_time(a.args[1], a.line));
  } else if (v == "report_fault") {
    dev.set_reported_fault(a.args.size() < 2 || parse_switch(a.args[1], a.line));
  } else if (v == "change_config") {
    dev.change_config(a.args[1], to_bytes(a.args[2]));
  } else {
    throw ScriptError(a.line, "unknown action '" + v + "'");
  }
}

OrchestratorConfig scenario_config(const Script& script, const net::Endpoint& switch_endpoint,
                                   const std::string& community, const std::filesystem::path& work_dir) {
  std::ostringstream text;
  text << "switchEndpoint = " << switch_endpoint.str() << "\n";
  text << "community = " << community << "\n";
  text << "snapshotDir = " << (work_dir / "snapshots").string() << "\n";
  const std::map<std::string, std::string> keys = {
      {"poll_period", "pollPeriod"},
      {"miss_threshold", "missThreshold"},
      {"stage_retries", "stageRetries"},
      {"reboot_bound_multiplier", "rebootBoundMultiplier"},
      {"stage_backoff", "stageBackoff"},
      {"conduit_timeout", "conduitTimeout"},
      {"ftp_timeout", "ftpTimeout"},
      {"snmp_timeout", "snmpTimeout"},
      {"heartbeat", "heartbeat"},
      {"allow_cross_port", "allowCrossPort"},
      {"history_depth", "historyDepth"},
      {"required_params", "requiredHardwareParams"},
  };
  std::map<std::string, std::string> values = {
      {"pollPeriod", "100ms"},   {"conduitTimeout", "300ms"}, {"ftpTimeout", "2s"},
      {"snmpTimeout", "200ms"},  {"snmpRetries", "1"},        {"stageBackoff", "200ms"},
  };
  for (const auto& [k, v] : script.settings) {
    if (auto it = keys.find(k); it != keys.end()) values[it->second] = v;
  }
  for (const auto& [k, v] : values) text << k << " = " << v << "\n";
  return parse_config(text.str());
}

std::string format_report(const ScenarioReport& r) {
  std::ostringstream out;
  for (const auto& e : r.events) out << to_untimed_line(e) << "\n";
  for (const auto& h : r.heals) {
    out << "heal job=" << h.job << " failed=" << h.failed.str() << " candidate=" << h.candidate.str()
        << " port=" << h.port << " type=\"" << h.device_type << "\" elapsed=" << format_duration(h.elapsed()) << "\n";
  }
  return out.str();
}

ScenarioRunner::ScenarioRunner(Script script, RunOptions options)
    : script_(std::move(script)), options_(std::move(options)) {
  const auto community = script_.settings.contains("community") ? script_.settings.at("community") : "public";
  harness_ = std::make_unique<SimHarness>(script_, community);
  log_ = options_.event_log ? std::make_unique<EventLog>(*options_.event_log) : std::make_unique<EventLog>();
  config_ = scenario_config(script_, harness_->sw().endpoint(), community, options_.work_dir);
  snmp::SnmpClientOptions snmp_opts;
  snmp_opts.timeout = std::chrono::duration_cast<net::Timeout>(config_.snmp_timeout);
  snmp_opts.retries = config_.snmp_retries;
  source_ = std::make_unique<SnmpTableSource>(config_.switch_endpoint, config_.community, config_.table_roots,
                                              snmp_opts);
  orchestrator_ = std::make_unique<Orchestrator>(
      config_, OrchestratorServices{*source_, harness_->resolver(), harness_->firmware(), *log_, harness_->clock()});
}

ScenarioReport ScenarioRunner::run() {
  ScenarioReport report;
  const auto wall_start = std::chrono::steady_clock::now();
  const auto period = config_.poll_period;
  auto& clock = harness_->clock();

  if (!script_.empty()) {
    const auto end = script_.end_time();
    std::size_t next = 0;
    for (Duration t{}; t <= end; t += period) {
      while (next < script_.actions.size() && script_.actions[next].at <= t) {
        const auto& a = script_.actions[next++];
        clock.set(a.at);
        harness_->apply(a);
        if (a.verb == "attach") {
          const auto& dev = harness_->device(a.args[1]);
          report.attachments.push_back({a.at, std::stoi(a.args[0]), dev.name(), dev.mac()});
        }
      }
      clock.set(t);
      if (options_.real_time) {
        std::this_thread::sleep_until(wall_start + t);
      }
      orchestrator_->tick();
      ++report.ticks;
      if (options_.after_tick) options_.after_tick(*orchestrator_);
    }
  }

  report.events = log_->events();
  report.jobs = orchestrator_->engine().jobs();
  report.final_inventory = orchestrator_->inventory();
  report.simulated = clock.now();
  for (const auto& e : report.events) {
    if (e.kind != "healed") continue;
    HealTiming h;
    h.job = std::stoull(e.field("job"));
    h.failed = MacAddress::parse(e.field("failed"));
    h.candidate = MacAddress::parse(e.field("candidate"));
    h.port = e.field("port") == "-" ? 0 : std::stoi(e.field("port"));
    h.device_type = e.field("device_type");
    h.healed_at = e.at;
    for (const auto& a : report.attachments) {
      if (a.mac == h.candidate && a.at <= e.at) {
        h.attached_at = a.at;
        h.candidate_name = a.device;
      }
    }
    report.heals.push_back(h);
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return report;
}

ScenarioReport run_scenario(const Script& script, const RunOptions& options) {
  ScenarioRunner runner(script, options);
  return runner.run();
}

}  // namespace selfheal::sim
