// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "selfheal/conduit.hpp"
#include "selfheal/device_link.hpp"
#include "selfheal/inventory_monitor.hpp"
#include "selfheal/matcher.hpp"
#include "selfheal/scenario.hpp"
#include "selfheal/snapshot_store.hpp"
#include "selfheal/snmp_tables.hpp"
#include "temp_dir.hpp"

using namespace selfheal;
using namespace selfheal::sim;
using namespace std::chrono_literals;
using testing_support::TempDir;

namespace {

struct Verdict {
  bool ok = true;
  std::string detail;
  std::vector<std::string> problems;

  void fail(const std::string& why) {
    ok = false;
    if (problems.size() < 5) problems.push_back(why);
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 2) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(prec);
  o << v;
  return o.str();
}

// --- shared bookkeeping for 6 and 7 -----------------------------------------

struct RunAudit {
  std::size_t runs = 0;
  std::size_t healed_jobs = 0;
  std::size_t bystanders = 0;
  std::vector<std::string> order_problems;
  std::vector<std::string> bystander_problems;
};

RunAudit g_audit;

bool is_mutating(const DeviceMessage& m) {
  return m.kind == "SetCharacteristics" || m.kind == "ActivateConfig" || m.kind == "STOR";
}

// Looks at every device of a finished run: stage order for healed
// candidates, zero mutating traffic for everyone not involved in a job.
void audit(ScenarioRunner& runner, const ScenarioReport& report) {
  ++g_audit.runs;
  std::set<MacAddress> involved;
  for (const auto& j : report.jobs) {
    involved.insert(j.failed_mac);
    involved.insert(j.candidate_mac);
  }
  for (const auto& j : report.jobs) {
    if (j.stage != HealingStage::Healed) continue;
    ++g_audit.healed_jobs;
    const auto msgs = runner.harness().device(j.candidate_mac.str()).messages();
    long set_at = -1, fw_first = -1, fw_last = -1, cfg_first = -1;
    for (long i = 0; i < static_cast<long>(msgs.size()); ++i) {
      const auto& m = msgs[static_cast<std::size_t>(i)];
      if (m.kind == "SetCharacteristics" && set_at < 0) set_at = i;
      if (m.kind == "STOR" && m.detail.rfind(link::kFirmwareDir, 0) == 0) {
        if (fw_first < 0) fw_first = i;
        fw_last = i;
      }
      if (m.kind == "STOR" && m.detail.rfind(link::kConfigDir, 0) == 0 && cfg_first < 0) cfg_first = i;
    }
    const std::string who = "job " + std::to_string(j.id) + " " + j.candidate_mac.str();
    if (set_at < 0) g_audit.order_problems.push_back(who + ": no SetCharacteristics");
    if (fw_first >= 0 && fw_first < set_at) g_audit.order_problems.push_back(who + ": firmware before characteristics");
    if (cfg_first >= 0 && cfg_first < set_at) g_audit.order_problems.push_back(who + ": config before characteristics");
    if (cfg_first >= 0 && fw_last > cfg_first) g_audit.order_problems.push_back(who + ": firmware after config");
  }
  for (const auto& dev : runner.harness().devices()) {
    if (involved.contains(dev->mac())) continue;
    ++g_audit.bystanders;
    for (const auto& m : dev->messages()) {
      if (is_mutating(m)) {
        g_audit.bystander_problems.push_back(dev->name() + " got " + m.kind + " " + m.detail);
        break;
      }
    }
  }
}

ScenarioReport run_audited(const std::string& script_text,
                           const std::function<void(ScenarioRunner&)>& per_tick = {}) {
  TempDir dir("acc");
  RunOptions opts;
  opts.work_dir = dir.path();
  ScenarioRunner* self = nullptr;
  if (per_tick) opts.after_tick = [&](const Orchestrator&) { per_tick(*self); };
  ScenarioRunner runner(parse_script(script_text), opts);
  self = &runner;
  auto report = runner.run();
  audit(runner, report);
  return report;
}

std::size_t count_kind(const ScenarioReport& r, const std::string& kind) {
  return static_cast<std::size_t>(
      std::count_if(r.events.begin(), r.events.end(), [&](const Event& e) { return e.kind == kind; }));
}

// --- 1 ----------------------------------------------------------------------

Verdict join_oracle() {
  Verdict v;
  std::mt19937_64 rng(1);
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t n = 0;
  for (double overlap : {0.0, 0.5, 1.0}) {
    for (int i = 0; i < 350; ++i, ++n) {
      auto t = oracle::random_triple(rng, overlap, 200);
      auto want = oracle::nested_loop_join(t.mac, t.portnum, t.iface);
      snmp::JoinStats stats;
      auto got = snmp::build_lookup_table(t.mac, t.portnum, t.iface, &stats);
      if (oracle::flatten(got) != want.rows) v.fail("rows differ at overlap " + fmt(overlap, 1) + " #" + std::to_string(i));
      if (!(stats == want.stats)) v.fail("stats differ at overlap " + fmt(overlap, 1) + " #" + std::to_string(i));
    }
  }
  const double secs = seconds_since(t0);
  if (secs >= 10.0) v.fail("took " + fmt(secs) + " s");
  v.detail = std::to_string(n) + " triples in " + fmt(secs) + " s";
  return v;
}

// --- 2 ----------------------------------------------------------------------

Verdict diff_round_trip() {
  Verdict v;
  std::mt19937_64 rng(2);
  std::vector<MacAddress> pool;
  for (int i = 0; i < 80; ++i) pool.push_back(oracle::random_mac(rng));
  std::uniform_real_distribution<double> presence(0.0, 1.0);
  const int n = 1200;
  for (int i = 0; i < n; ++i) {
    auto prev = oracle::random_table(rng, pool, presence(rng));
    auto next = oracle::random_table(rng, pool, presence(rng));
    auto d = diff_tables(prev, next);
    if (apply_diff(prev.pairs(), d) != next.pairs()) v.fail("round trip #" + std::to_string(i));
    if (d.added != oracle::minus(next, prev) || d.removed != oracle::minus(prev, next)) {
      v.fail("set difference #" + std::to_string(i));
    }
  }
  v.detail = std::to_string(n) + " pairs";
  return v;
}

// --- 3 ----------------------------------------------------------------------

const char* kSingle = R"(
DEVICE amp1  mac=02:00:00:00:01:01 type="Crown I-Tech HD" fw=2.1.0 addr=101 ip=10.0.0.101 hw.channels=4 config.preset="gain=-3\nlimiter=on" config.routing="in1->out1"
DEVICE amp1r mac=02:00:00:00:01:02 type="Crown I-Tech HD" fw=2.0.0 addr=900 ip=10.0.0.250 dhcp=on hw.channels=4
DEVICE spk   mac=02:00:00:00:02:01 type="Crown DCiN 300N" fw=1.4.0 addr=201 ip=10.0.0.201 hw.channels=2
AT 0s attach 3 amp1
AT 0s attach 4 spk
AT 1s detach amp1
AT 2s attach 3 amp1r
AT 2s advance 3s
)";

Verdict single_heal() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  TempDir dir("acc3");
  ScenarioRunner runner(parse_script(kSingle), RunOptions{dir.path()});
  auto r = runner.run();
  audit(runner, r);
  const double secs = seconds_since(t0);

  const auto failed = MacAddress::parse("02:00:00:00:01:01");
  std::size_t healed = 0;
  for (const auto& j : r.jobs) healed += j.stage == HealingStage::Healed;
  if (r.jobs.size() != 1 || healed != 1) v.fail(std::to_string(r.jobs.size()) + " jobs, " + std::to_string(healed) + " healed");

  auto snap = runner.orchestrator().store().load_latest_snapshot(failed);
  auto& cand = runner.harness().device("amp1r");
  const auto ch = cand.characteristics();
  if (ch.device_address != snap.characteristics.device_address) v.fail("deviceAddress differs");
  if (!(ch.ip_config == snap.characteristics.ip_config)) v.fail("ipConfig differs");
  if (!(cand.profile().firmware_version == snap.profile.firmware_version)) v.fail("firmware differs");
  if (cand.active_config_digest() != snap.config_digest()) v.fail("config digest differs");
  if (secs >= 5.0) v.fail("wall " + fmt(secs) + " s");
  const auto elapsed = r.heals.empty() ? Duration{} : r.heals[0].elapsed();
  v.detail = "healed " + fmt(std::chrono::duration<double>(elapsed).count()) + " s simulated after attach, wall " +
             fmt(secs) + " s";
  return v;
}

// --- 4 ----------------------------------------------------------------------

std::string mix_script(int n_a, int n_b) {
  std::ostringstream s;
  int port = 1, id = 1;
  std::vector<std::pair<int, std::string>> failed, repl;
  auto add = [&](const char* type, const char* fw_old, const char* fw_new, const char* ch, int count) {
    for (int i = 0; i < count; ++i, ++port, ++id) {
      char mac[32], rmac[32];
      std::snprintf(mac, sizeof mac, "02:00:00:00:10:%02x", id);
      std::snprintf(rmac, sizeof rmac, "02:00:00:00:20:%02x", id);
      s << "DEVICE f" << id << " mac=" << mac << " type=\"" << type << "\" fw=" << fw_old << " addr=" << 100 + id
        << " ip=10.0.1." << id << " hw.channels=" << ch << " config.preset=\"p" << id << "\"\n";
      s << "DEVICE r" << id << " mac=" << rmac << " type=\"" << type << "\" fw=" << fw_new
        << " addr=900 ip=10.0.0.250 dhcp=on hw.channels=" << ch << "\n";
      failed.emplace_back(port, "f" + std::to_string(id));
      repl.emplace_back(port, "r" + std::to_string(id));
    }
  };
  add("Crown I-Tech HD", "2.1.0", "2.0.0", "4", n_a);
  add("Crown DCiN 300N", "1.4.0", "1.4.0", "2", n_b);
  s << "DEVICE by mac=02:00:00:00:30:01 type=\"Crown I-Tech HD\" fw=2.1.0 addr=300 ip=10.0.3.1 hw.channels=4\n";
  for (auto& [p, n] : failed) s << "AT 0s attach " << p << " " << n << "\n";
  s << "AT 0s attach 20 by\n";
  for (auto& [p, n] : failed) s << "AT 1s detach " << n << "\n";
  std::reverse(repl.begin(), repl.end());
  for (auto& [p, n] : repl) s << "AT 2s attach " << p << " " << n << "\n";
  s << "AT 2s advance 5s\n";
  return s.str();
}

Verdict multi_heal() {
  Verdict v;
  std::ostringstream detail;
  for (auto [a, b] : {std::pair{1, 1}, std::pair{2, 1}}) {
    const std::string mix = "{" + std::to_string(a) + "A+" + std::to_string(b) + "B}";
    auto r = run_audited(mix_script(a, b));
    std::map<MacAddress, std::int32_t> first_port;
    for (const auto& at : r.attachments) first_port.emplace(at.mac, at.port);
    const auto expected = static_cast<std::size_t>(a + b);
    std::size_t healed = 0;
    for (const auto& j : r.jobs) {
      if (j.stage != HealingStage::Healed) {
        v.fail(mix + " job " + std::to_string(j.id) + " ended " + to_string(j.stage));
        continue;
      }
      ++healed;
      if (first_port.at(j.failed_mac) != first_port.at(j.candidate_mac)) {
        v.fail(mix + " cross-port match " + j.failed_mac.str() + " <- " + j.candidate_mac.str());
      }
    }
    for (const auto& h : r.heals) {
      if (h.port != first_port.at(h.candidate)) v.fail(mix + " heal reported on wrong port");
    }
    if (healed != expected) v.fail(mix + " healed " + std::to_string(healed) + " of " + std::to_string(expected));
    Duration batch{};
    for (const auto& h : r.heals) batch = std::max(batch, h.healed_at - h.attached_at);
    detail << mix << " " << healed << "/" << expected << " healed, batch "
           << fmt(std::chrono::duration<double>(batch).count()) << " s; ";
  }
  v.detail = detail.str();
  return v;
}

// --- 5 ----------------------------------------------------------------------

Verdict matching_rules() {
  Verdict v;
  std::mt19937_64 rng(5);
  const char* types[] = {"A", "B", "C"};
  const int sets = 600;
  std::size_t chosen_count = 0;
  for (int trial = 0; trial < sets; ++trial) {
    DeviceRecord failed;
    failed.mac = oracle::random_mac(rng);
    failed.port = 1 + static_cast<int>(rng() % 4);
    failed.status = DeviceStatus::Unreachable;
    const std::uint64_t fgen = 10 + rng() % 5;
    failed.open_failure = FailureEvent{failed.mac, FailureCause::LinkLoss, fgen, {}};
    ConfigSnapshot snap;
    snap.profile.device_type = "A";
    snap.profile.hardware_params = {{"ch", rng() % 2 ? "4" : "2"}};

    std::vector<DeviceRecord> cands;
    const int n = static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) {
      DeviceRecord c;
      c.mac = oracle::random_mac(rng);
      c.port = 1 + static_cast<int>(rng() % 4);
      c.status = DeviceStatus::Candidate;
      c.discovered_at_generation = 6 + rng() % 14;
      if (rng() % 8 != 0) {
        HardwareProfile p;
        p.device_type = types[rng() % 3];
        p.hardware_params = {{"ch", rng() % 2 ? "4" : "2"}};
        c.profile = p;
      }
      cands.push_back(c);
    }
    const auto want = oracle::choose_replacement(failed, cands, snap);
    const auto got = select_replacement(failed, cands, snap, MatchPolicy{});
    if (got.chosen != want) v.fail("set #" + std::to_string(trial) + " disagrees with the oracle");
    if (got.chosen) {
      ++chosen_count;
      const auto& c = *std::find_if(cands.begin(), cands.end(), [&](const auto& x) { return x.mac == *got.chosen; });
      if (c.port != failed.port) v.fail("wrong port chosen");
      if (c.profile->device_type != snap.profile.device_type) v.fail("wrong type chosen");
      if (c.discovered_at_generation <= fgen) v.fail("pre-failure device chosen");
    }
    for (int p = 0; p < 4; ++p) {
      std::shuffle(cands.begin(), cands.end(), rng);
      if (select_replacement(failed, cands, snap, MatchPolicy{}).chosen != want) {
        v.fail("set #" + std::to_string(trial) + " depends on order");
        break;
      }
    }
  }

  // Live: a same-type unit that was already on the failed device's port is
  // never enrolled as a candidate.
  auto r = run_audited(R"(
DEVICE amp1 mac=02:00:00:00:01:01 type=Amp fw=2.1.0 addr=101 ip=10.0.0.101 hw.ch=4
DEVICE twin mac=02:00:00:00:01:09 type=Amp fw=2.1.0 addr=109 ip=10.0.0.109 hw.ch=4
AT 0s attach 3 amp1
AT 0s attach 3 twin
AT 1s detach amp1
AT 1s advance 2s
)");
  const auto twin = MacAddress::parse("02:00:00:00:01:09");
  for (const auto& e : r.events) {
    if ((e.kind == "candidate_enrolled" && e.field("mac") == twin.str()) ||
        (e.kind == "job_created" && e.field("candidate") == twin.str())) {
      v.fail("pre-failure device enrolled");
    }
  }
  if (count_kind(r, "device_failed") != 1) v.fail("live failure not detected");
  v.detail = std::to_string(sets) + " sets (" + std::to_string(chosen_count) + " with a match), 4 permutations each";
  return v;
}

// --- 6 ----------------------------------------------------------------------

Verdict stage_order() {
  Verdict v;
  auto r = run_audited(R"(
DEVICE a  mac=02:00:00:00:03:01 type=Amp fw=2.0.0 addr=11 ip=10.0.0.11 hw.ch=4 config.p=x
DEVICE b  mac=02:00:00:00:03:02 type=Amp fw=2.0.0 addr=900 ip=10.0.0.250 hw.ch=4
AT 0s attach 1 a
AT 1s detach a
AT 2s attach 1 b
AT 2s advance 2s
)");
  std::uint64_t fw_bytes = 0;
  for (const auto& j : r.jobs) fw_bytes += j.firmware_bytes;
  if (r.heals.size() != 1) v.fail("equal-firmware swap did not heal");
  if (fw_bytes != 0 || count_kind(r, "firmware_sent") != 0) v.fail("firmware sent despite equal versions");
  for (const auto& p : g_audit.order_problems) v.fail(p);
  if (g_audit.healed_jobs == 0) v.fail("no healed jobs observed");
  v.detail = std::to_string(g_audit.healed_jobs) + " healed jobs checked; equal-version firmware bytes " +
             std::to_string(fw_bytes);
  return v;
}

// --- 7 ----------------------------------------------------------------------

Verdict non_interference() {
  Verdict v;
  for (const auto& p : g_audit.bystander_problems) v.fail(p);
  if (g_audit.bystanders == 0) v.fail("no bystanders observed");
  v.detail = std::to_string(g_audit.bystanders) + " bystander devices over " + std::to_string(g_audit.runs) + " runs";
  return v;
}

// --- 8 ----------------------------------------------------------------------

Verdict detection_latency() {
  Verdict v;
  std::mt19937_64 rng(8);
  const Duration P = 100ms;
  const int K = 3;
  const int schedules = 120;
  const Duration end = 3s;
  std::size_t failures = 0, transient = 0, steady = 0;
  Duration worst{};
  for (int s = 0; s < schedules; ++s) {
    std::ostringstream text;
    text << "SET poll_period 100ms\nSET miss_threshold 3\n";
    struct Plan {
      std::string name;
      MacAddress mac;
      std::optional<Duration> gone, back;
    };
    std::vector<Plan> plans;
    const int n = 3 + static_cast<int>(rng() % 4);
    for (int i = 0; i < n; ++i) {
      char mac[32];
      std::snprintf(mac, sizeof mac, "02:00:00:%02x:40:%02x", s & 0xff, i + 1);
      Plan p{"d" + std::to_string(i), MacAddress::parse(mac), {}, {}};
      text << "DEVICE " << p.name << " mac=" << mac << " type=T fw=1.0.0 addr=" << 10 + i << " ip=10.0.4." << 10 + i
           << "\n";
      if (rng() % 10 < 6) {
        p.gone = Duration(std::chrono::milliseconds(250 + rng() % 1750));
        if (rng() % 2) p.back = *p.gone + Duration(std::chrono::milliseconds(30 + rng() % 570));
      }
      plans.push_back(p);
    }
    std::vector<std::pair<Duration, std::string>> acts;
    for (int i = 0; i < n; ++i) acts.emplace_back(Duration{}, "attach " + std::to_string(i + 1) + " " + plans[i].name);
    for (int i = 0; i < n; ++i) {
      if (plans[i].gone) acts.emplace_back(*plans[i].gone, "detach " + plans[i].name);
      if (plans[i].back) acts.emplace_back(*plans[i].back, "attach " + std::to_string(i + 1) + " " + plans[i].name);
    }
    std::stable_sort(acts.begin(), acts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [at, what] : acts) text << "AT " << std::chrono::duration_cast<std::chrono::milliseconds>(at).count() << "ms " << what << "\n";
    text << "AT " << std::chrono::duration_cast<std::chrono::milliseconds>(end - P).count() << "ms advance 100ms\n";

    auto r = run_audited(text.str());
    for (const auto& p : plans) {
      std::vector<const Event*> mine;
      for (const auto& e : r.events) {
        if (e.field("mac") == p.mac.str() && e.kind != "device_discovered" && e.kind != "snapshot_taken") mine.push_back(&e);
      }
      const std::string who = "schedule " + std::to_string(s) + " " + p.name;
      if (!p.gone) {
        ++steady;
        if (!mine.empty()) v.fail(who + " never absent but logged " + mine.front()->kind);
        continue;
      }
      // rounds run at multiples of P; the detaching round is the first one at
      // or after the detach
      const auto first_round = ((*p.gone + P - Duration(1)) / P) * P;
      const auto until = p.back.value_or(end + P);
      int absent_rounds = 0;
      for (auto t = first_round; t < until && t <= end; t += P) ++absent_rounds;
      const Event* failed = nullptr;
      for (const auto* e : mine) {
        if (e->kind == "device_failed" && !failed) failed = e;
      }
      if (absent_rounds >= K) {
        ++failures;
        if (!failed) {
          v.fail(who + " absent " + std::to_string(absent_rounds) + " rounds, no device_failed");
        } else {
          const auto lag = failed->at - first_round;
          worst = std::max(worst, lag);
          if (failed->field("cause") != "LinkLoss") v.fail(who + " cause " + failed->field("cause"));
          if (lag < Duration{} || lag > 400ms) v.fail(who + " lag " + format_duration(lag));
        }
      } else {
        ++transient;
        if (failed) v.fail(who + " failed after only " + std::to_string(absent_rounds) + " absent rounds");
      }
    }
  }
  v.detail = std::to_string(schedules) + " schedules: " + std::to_string(failures) + " failures (worst lag " +
             format_duration(worst) + "), " + std::to_string(transient) + " short absences, " + std::to_string(steady) +
             " steady devices";
  return v;
}

// --- 9 ----------------------------------------------------------------------

Verdict abort_safety() {
  Verdict v;
  // Tick grid of the swap below: job at 2.0s, characteristics 2.1s, image
  // 2.2s, back from reboot 2.7s, configuration 2.8s. Each fault is armed
  // just before the stage it targets.
  struct Cell {
    const char* fault;
    const char* stage;
    std::string action;
    HealingStage reached;  // last stage completed before the abort
  };
  const std::vector<Cell> cells = {
      {"conduit timeout", "characteristics", "AT 2.05s mute amp1r", HealingStage::Matched},
      {"conduit timeout", "firmware", "AT 2.15s mute amp1r", HealingStage::CharacteristicsMapped},
      {"conduit timeout", "configuration", "AT 2.75s mute amp1r", HealingStage::FirmwareMapped},
      {"characteristics rejected", "characteristics", "AT 2.05s nack_next amp1r", HealingStage::Matched},
      {"transfer abort", "firmware", "AT 2.15s drop_ftp amp1r 1.0", HealingStage::CharacteristicsMapped},
      {"transfer abort", "configuration", "AT 2.75s drop_ftp amp1r 1.0", HealingStage::FirmwareMapped},
      {"checksum corruption", "firmware", "AT 2.15s corrupt_next_transfer amp1r", HealingStage::CharacteristicsMapped},
      {"checksum corruption", "configuration", "AT 2.75s corrupt_next_transfer amp1r", HealingStage::FirmwareMapped},
      {"reboot overrun", "firmware", "AT 2.15s reboot_delay amp1r 5s", HealingStage::CharacteristicsMapped},
  };
  const auto failed_mac = MacAddress::parse("02:00:00:00:01:01");
  std::size_t passed = 0;
  for (const auto& cell : cells) {
    const std::string name = std::string(cell.fault) + " @ " + cell.stage;
    const std::string script = std::string(R"(
DEVICE amp1  mac=02:00:00:00:01:01 type=Amp fw=2.1.0 addr=101 ip=10.0.0.101 hw.ch=4 config.preset="gain=-3"
DEVICE amp1r mac=02:00:00:00:01:02 type=Amp fw=2.0.0 addr=900 ip=10.0.0.250 hw.ch=4
DEVICE amp1h mac=02:00:00:00:01:03 type=Amp fw=2.0.0 addr=900 ip=10.0.0.250 hw.ch=4
DEVICE spk   mac=02:00:00:00:02:01 type=Spk fw=1.0.0 addr=201 ip=10.0.0.201 hw.ch=2
AT 0s attach 3 amp1
AT 0s attach 4 spk
AT 1s detach amp1
AT 2s attach 3 amp1r
)") + cell.action + R"(
AT 8s detach amp1r
AT 9s attach 3 amp1h
AT 9s advance 3s
)";
    std::vector<std::string> problems;
    bool aborted_seen = false, failure_closed_early = false;
    auto per_tick = [&](ScenarioRunner& runner) {
      const auto& o = runner.orchestrator();
      for (const auto& msg : o.inventory().check_invariants()) {
        if (problems.size() < 3) problems.push_back("invariant: " + msg);
      }
      // on the wire: no two attached devices answer to one address
      std::map<std::uint32_t, std::string> live;
      for (const auto& [mac, port] : runner.harness().sw().attachments()) {
        const auto& dev = runner.harness().device(mac.str());
        auto [it, fresh] = live.emplace(dev.characteristics().device_address, dev.name());
        if (!fresh && problems.size() < 3) {
          problems.push_back("address " + std::to_string(it->first) + " on " + it->second + " and " + dev.name());
        }
      }
      const auto& jobs = o.engine().jobs();
      if (!jobs.empty() && jobs.front().stage == HealingStage::Aborted) aborted_seen = true;
      bool healed_original = false;
      for (const auto& j : jobs) healed_original |= j.failed_mac == failed_mac && j.stage == HealingStage::Healed;
      const auto* rec = o.inventory().find(failed_mac);
      if (aborted_seen && !healed_original && (!rec || !rec->open_failure)) failure_closed_early = true;
    };
    auto r = run_audited(script, per_tick);
    const bool before = v.ok;
    for (const auto& p : problems) v.fail(name + ": " + p);
    if (r.jobs.empty() || r.jobs.front().stage != HealingStage::Aborted) {
      v.fail(name + ": first job not aborted");
    } else if (!r.jobs.front().stage_timestamps.contains(cell.reached) ||
               r.jobs.front().stage_timestamps.size() != static_cast<std::size_t>(cell.reached) + 2) {
      v.fail(name + ": aborted at the wrong stage");
    }
    if (failure_closed_early) v.fail(name + ": failure closed without a heal");
    bool original_healed = false;
    for (const auto& h : r.heals) original_healed |= h.failed == failed_mac;
    if (!original_healed) v.fail(name + ": failed device never healed");
    if (r.heals.empty() || r.heals.back().candidate_name != "amp1h") v.fail(name + ": later healthy candidate did not heal");
    if (v.ok && before) ++passed;
  }
  v.detail = std::to_string(passed) + "/" + std::to_string(cells.size()) + " fault cells";
  return v;
}

// --- 10 ---------------------------------------------------------------------

Verdict snapshot_durability() {
  Verdict v;
  auto rec = DeviceRecord{};
  rec.mac = MacAddress::parse("02:00:00:00:0f:01");
  rec.characteristics = Characteristics{7, {Ipv4::parse("10.0.0.7"), false}};
  rec.profile = HardwareProfile{"Amp", {{"ch", "4"}}, FirmwareVersion::parse("1.2.3")};
  auto files = [](const std::string& tag) {
    return std::vector<std::pair<std::string, Bytes>>{
        {"preset", to_bytes("gain=" + tag)}, {"routing", to_bytes("route=" + tag)}, {"names", to_bytes("n=" + tag)}};
  };
  auto tag_of = [](const ConfigSnapshot& s) -> std::string {
    std::set<std::string> tags;
    for (const auto& f : s.config_files) {
      const std::string t(f.bytes.begin(), f.bytes.end());
      tags.insert(t.substr(t.find('=') + 1));
    }
    return tags.size() == 1 ? *tags.begin() : "<mixed>";
  };

  std::size_t cuts = 0;
  // prior = number of complete saves before the interrupted one; with
  // history depth 2 the third save also prunes.
  for (int prior = 0; prior <= 2; ++prior) {
    TempDir probe_dir("acc10p");
    std::size_t steps = 0;
    {
      SnapshotStore probe(probe_dir.path(), StoreOptions{2});
      for (int i = 0; i < prior; ++i) probe.save_snapshot(rec, files("old" + std::to_string(i)), 1 + i);
      probe.set_write_hook([&](int, const std::string&) { ++steps; });
      probe.save_snapshot(rec, files("new"), 10);
    }
    for (std::size_t cut = 0; cut <= steps; ++cut, ++cuts) {
      TempDir dir("acc10");
      SnapshotStore store(dir.path(), StoreOptions{2});
      for (int i = 0; i < prior; ++i) store.save_snapshot(rec, files("old" + std::to_string(i)), 1 + i);
      std::size_t n = 0;
      store.set_write_hook([&](int, const std::string&) {
        if (n++ == cut) throw SimulatedInterruption();
      });
      try {
        store.save_snapshot(rec, files("new"), 10);
      } catch (const SimulatedInterruption&) {
      }
      const std::string where = "prior " + std::to_string(prior) + " cut " + std::to_string(cut);
      // reopen, as a restarted process would
      SnapshotStore fresh(dir.path(), StoreOptions{2});
      try {
        auto s = fresh.load_latest_snapshot(rec.mac);
        const auto tag = tag_of(s);
        const std::string last_old = prior ? "old" + std::to_string(prior - 1) : "";
        if (tag != "new" && tag != last_old) v.fail(where + ": loaded '" + tag + "'");
        if (s.config_files.size() != 3) v.fail(where + ": " + std::to_string(s.config_files.size()) + " files");
        for (const auto& f : s.config_files) {
          if (digest(f.bytes) != f.checksum) v.fail(where + ": checksum mismatch in " + f.logical_name);
        }
        if (!(s.characteristics == *rec.characteristics) || !(s.profile == *rec.profile)) v.fail(where + ": header differs");
        if (cut == steps && tag != "new") v.fail(where + ": completed save not visible");
      } catch (const SnapshotError& e) {
        if (prior > 0 || e.kind() != SnapshotError::Kind::NotFound) v.fail(where + ": " + e.what());
      }
    }
  }
  v.detail = std::to_string(cuts) + " interruption points";
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    std::function<Verdict()> run;
  };
  // 7 reads what the other scenario runs recorded, so it is evaluated last.
  std::vector<Criterion> criteria = {
      {1, "join equals nested-loop oracle", join_oracle},
      {2, "diff round-trip", diff_round_trip},
      {3, "single-device heal", single_heal},
      {4, "multi-device heal, same-port matching", multi_heal},
      {5, "matching rules vs. oracle", matching_rules},
      {8, "failure-detection latency", detection_latency},
      {9, "abort safety matrix", abort_safety},
      {10, "snapshot durability", snapshot_durability},
      {6, "stage order and firmware gate", stage_order},
      {7, "non-interference", non_interference},
  };
  std::map<int, std::pair<std::string, Verdict>> results;
  for (auto& c : criteria) {
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.fail(std::string("exception: ") + e.what());
    }
    results[c.id] = {c.title, v};
  }
  int failed = 0;
  for (const auto& [id, tv] : results) {
    const auto& [title, v] = tv;
    std::cout << "criterion " << id << ": " << (v.ok ? "PASS" : "FAIL") << "  " << title;
    if (!v.detail.empty()) std::cout << " (" << v.detail << ")";
    std::cout << "\n";
    for (const auto& p : v.problems) std::cout << "    " << p << "\n";
    failed += !v.ok;
  }
  std::cout << (10 - failed) << "/10 criteria passed\n";
  return failed ? 1 : 0;
}
