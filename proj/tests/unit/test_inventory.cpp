#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "selfheal/inventory.hpp"
#include "selfheal/inventory_monitor.hpp"

using namespace selfheal;
using namespace std::chrono_literals;

namespace {

SwitchLookupTable table_of(std::uint64_t gen, std::vector<std::pair<int, const char*>> rows) {
  SwitchLookupTable t;
  t.generation = gen;
  for (auto [port, mac] : rows) {
    t.ports[port].if_name = "Gi0/" + std::to_string(port);
    t.ports[port].macs.insert(MacAddress::parse(mac));
  }
  return t;
}

DeviceRecord online(const char* mac, int port, std::uint64_t gen = 1) {
  DeviceRecord r;
  r.mac = MacAddress::parse(mac);
  r.port = port;
  r.status = DeviceStatus::Online;
  r.discovered_at_generation = gen;
  r.last_seen_generation = gen;
  return r;
}

// Stand-in table source fed by the test.
struct ScriptedSource : TableSource {
  std::vector<SwitchLookupTable> tables;
  std::size_t next = 0;
  bool fail = false;
  SwitchLookupTable retrieve(snmp::RoundDiagnostics*) override {
    if (fail) throw snmp::SnmpError(snmp::SnmpError::Kind::Timeout, "no answer");
    return tables.at(std::min(next++, tables.size() - 1));
  }
};

}  // namespace

TEST_CASE("diff equals brute-force set difference and round-trips") {
  std::mt19937_64 rng(99);
  std::vector<MacAddress> pool;
  for (int i = 0; i < 40; ++i) pool.push_back(oracle::random_mac(rng));
  for (int i = 0; i < 300; ++i) {
    auto prev = oracle::random_table(rng, pool, 0.5);
    auto next = oracle::random_table(rng, pool, 0.5);
    auto d = diff_tables(prev, next);
    CHECK(d.added == oracle::minus(next, prev));
    CHECK(d.removed == oracle::minus(prev, next));
    CHECK(apply_diff(prev.pairs(), d) == next.pairs());
  }
  auto t = oracle::random_table(rng, pool, 0.7);
  CHECK(diff_tables(t, t).empty());
}

TEST_CASE("status transitions") {
  using S = DeviceStatus;
  CHECK(is_legal_transition(S::Online, S::Unreachable));
  CHECK(is_legal_transition(S::Online, S::ReportedFailed));
  CHECK(is_legal_transition(S::Unreachable, S::Retired));
  CHECK(is_legal_transition(S::ReportedFailed, S::Online));
  CHECK(is_legal_transition(S::Candidate, S::Healing));
  CHECK(is_legal_transition(S::Healing, S::Candidate));
  CHECK_FALSE(is_legal_transition(S::Retired, S::Online));
  CHECK_FALSE(is_legal_transition(S::Online, S::Retired));
  CHECK_FALSE(is_legal_transition(S::Candidate, S::Retired));
  Inventory inv;
  inv.add(online("02:00:00:00:00:01", 1));
  CHECK_THROWS_AS(inv.add(online("02:00:00:00:00:01", 1)), std::logic_error);
  CHECK_THROWS_AS(inv.set_status(MacAddress::parse("02:00:00:00:00:01"), S::Retired), IllegalTransition);
}

TEST_CASE("K consecutive misses raise one LinkLoss failure") {
  Inventory inv;
  inv.add(online("02:00:00:00:00:01", 1));
  inv.add(online("02:00:00:00:00:02", 2));
  EventLog log;
  const auto mac = MacAddress::parse("02:00:00:00:00:01");
  for (std::uint64_t gen = 2; gen <= 4; ++gen) {
    auto t = table_of(gen, {{2, "02:00:00:00:00:02"}});
    auto failures = classify_failures(inv, t, {}, 3, Duration(gen), &log);
    if (gen < 4) {
      CHECK(failures.empty());
      CHECK(inv.find(mac)->status == DeviceStatus::Online);
    } else {
      REQUIRE(failures.size() == 1);
      CHECK(failures[0].cause == FailureCause::LinkLoss);
      CHECK(failures[0].detected_at_generation == 4);
    }
  }
  CHECK(inv.find(mac)->status == DeviceStatus::Unreachable);
  auto again = classify_failures(inv, table_of(5, {{2, "02:00:00:00:00:02"}}), {}, 3, Duration(5), &log);
  CHECK(again.empty());
  CHECK(inv.find(MacAddress::parse("02:00:00:00:00:02"))->status == DeviceStatus::Online);
  CHECK(inv.check_invariants(nullptr).empty());
}

TEST_CASE("a short absence below K produces no failure") {
  Inventory inv;
  inv.add(online("02:00:00:00:00:01", 1));
  classify_failures(inv, table_of(2, {}), {}, 3, {}, nullptr);
  classify_failures(inv, table_of(3, {}), {}, 3, {}, nullptr);
  auto f = classify_failures(inv, table_of(4, {{1, "02:00:00:00:00:01"}}), {}, 3, {}, nullptr);
  CHECK(f.empty());
  CHECK(inv.find(MacAddress::parse("02:00:00:00:00:01"))->miss_count == 0);
}

TEST_CASE("heartbeat failure marks ReportedFailed and a healthy answer recovers") {
  Inventory inv;
  inv.add(online("02:00:00:00:00:01", 1));
  const auto mac = MacAddress::parse("02:00:00:00:00:01");
  HeartbeatReport hb;
  hb.failed.insert(mac);
  hb.failed.insert(MacAddress::parse("02:00:00:00:00:99"));
  EventLog log;
  auto t = table_of(2, {{1, "02:00:00:00:00:01"}});
  auto f = classify_failures(inv, t, hb, 3, {}, &log);
  REQUIRE(f.size() == 1);
  CHECK(f[0].cause == FailureCause::Reported);
  CHECK(inv.find(mac)->status == DeviceStatus::ReportedFailed);
  bool unknown_logged = false;
  for (const auto& e : log.events()) unknown_logged = unknown_logged || e.kind == "heartbeat_unknown_mac";
  CHECK(unknown_logged);
  HeartbeatReport ok;
  ok.healthy.insert(mac);
  classify_failures(inv, table_of(3, {{1, "02:00:00:00:00:01"}}), ok, 3, {}, &log);
  CHECK(inv.find(mac)->status == DeviceStatus::Online);
  CHECK_FALSE(inv.find(mac)->open_failure);
}

TEST_CASE("new MACs are candidates only after a failure") {
  Inventory inv;
  auto r = online("02:00:00:00:00:01", 1);
  r.status = DeviceStatus::Unreachable;
  r.open_failure = FailureEvent{r.mac, FailureCause::LinkLoss, 5, {}};
  inv.add(r);

  // Discovered in the same generation as the failure: not a candidate.
  auto t5 = table_of(5, {{1, "02:00:00:00:00:02"}});
  auto u = update_candidates(inv, diff_tables(table_of(4, {}), t5), t5, {}, nullptr);
  CHECK(u.enrolled.size() == 1);
  CHECK(inv.find(MacAddress::parse("02:00:00:00:00:02"))->status == DeviceStatus::Online);

  auto t6 = table_of(6, {{1, "02:00:00:00:00:02"}, {1, "02:00:00:00:00:03"}});
  u = update_candidates(inv, diff_tables(t5, t6), t6, {}, nullptr);
  REQUIRE(u.candidates.size() == 1);
  CHECK(inv.find(MacAddress::parse("02:00:00:00:00:03"))->status == DeviceStatus::Candidate);

  // The candidate leaves before it is used.
  auto t7 = table_of(7, {{1, "02:00:00:00:00:02"}});
  u = update_candidates(inv, diff_tables(t6, t7), t7, {}, nullptr);
  CHECK(u.withdrawn.size() == 1);
  CHECK(inv.find(MacAddress::parse("02:00:00:00:00:03")) == nullptr);

  // The failed device comes back: failure closed.
  auto t8 = table_of(8, {{1, "02:00:00:00:00:02"}, {1, "02:00:00:00:00:01"}});
  u = update_candidates(inv, diff_tables(t7, t8), t8, {}, nullptr);
  CHECK(u.returned.size() == 1);
  CHECK(inv.find(r.mac)->status == DeviceStatus::Online);
  CHECK(inv.open_failures().empty());
}

TEST_CASE("candidates without any eligible failure are enrolled") {
  Inventory inv;
  auto c = online("02:00:00:00:00:05", 1, 3);
  c.status = DeviceStatus::Candidate;
  inv.add(c);
  auto t = table_of(4, {{1, "02:00:00:00:00:05"}});
  auto u = update_candidates(inv, diff_tables(t, t), t, {}, nullptr);
  CHECK(u.enrolled.size() == 1);
  CHECK(inv.find(c.mac)->status == DeviceStatus::Online);
}

TEST_CASE("monitor generations advance only on successful rounds") {
  ScriptedSource src;
  src.tables = {table_of(0, {{1, "02:00:00:00:00:01"}}), table_of(0, {})};
  EventLog log;
  VirtualClock clock;
  InventoryMonitor mon(src, MonitorOptions{3}, log, clock);
  auto r1 = mon.poll_once();
  CHECK(r1.ok);
  CHECK(mon.generation() == 1);
  CHECK(r1.diff.added.size() == 1);
  src.fail = true;
  for (int i = 0; i < 3; ++i) CHECK_FALSE(mon.poll_once().ok);
  CHECK(mon.generation() == 1);
  CHECK_FALSE(mon.switch_reachable());
  src.fail = false;
  auto r2 = mon.poll_once();
  CHECK(r2.ok);
  CHECK(mon.generation() == 2);
  CHECK(r2.diff.removed.size() == 1);
  CHECK(mon.switch_reachable());
  int unreachable = 0, recovered = 0;
  for (const auto& e : log.events()) {
    unreachable += e.kind == "switch_unreachable";
    recovered += e.kind == "switch_recovered";
  }
  CHECK(unreachable == 1);
  CHECK(recovered == 1);
}

TEST_CASE("invariant checker flags inconsistencies") {
  Inventory inv;
  auto a = online("02:00:00:00:00:01", 1);
  a.characteristics = Characteristics{7, {}};
  auto b = online("02:00:00:00:00:02", 2);
  b.characteristics = Characteristics{7, {}};
  inv.add(a);
  inv.add(b);
  auto t = table_of(1, {{1, "02:00:00:00:00:01"}});
  auto problems = inv.check_invariants(&t);
  CHECK(problems.size() == 2);
}

TEST_CASE("address uniqueness covers in-service records only") {
  Inventory inv;
  auto failed = online("02:00:00:00:00:01", 1);
  failed.characteristics = Characteristics{7, {}};
  failed.status = DeviceStatus::Unreachable;
  failed.open_failure = FailureEvent{failed.mac, FailureCause::LinkLoss, 1, {}};
  auto healing = online("02:00:00:00:00:02", 1);
  healing.characteristics = Characteristics{7, {}};
  healing.status = DeviceStatus::Healing;
  auto cand = online("02:00:00:00:00:03", 1);
  cand.characteristics = Characteristics{7, {}};
  cand.status = DeviceStatus::Candidate;
  inv.add(failed);
  inv.add(healing);
  inv.add(cand);
  CHECK(inv.check_invariants().empty());
  auto other = online("02:00:00:00:00:04", 2);
  other.characteristics = Characteristics{7, {}};
  inv.add(other);
  CHECK(inv.check_invariants().size() == 1);
}
