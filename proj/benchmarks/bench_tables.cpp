#include <benchmark/benchmark.h>

#include <random>

#include "oracles.hpp"
#include "selfheal/inventory_monitor.hpp"
#include "selfheal/sim_switch.hpp"
#include "selfheal/snmp_client.hpp"
#include "selfheal/snmp_tables.hpp"

using namespace selfheal;

static void BM_BuildLookupTable(benchmark::State& state) {
  std::mt19937_64 rng(7);
  auto t = oracle::random_triple(rng, 1.0, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(snmp::build_lookup_table(t.mac, t.portnum, t.iface));
  }
  state.counters["rows"] = static_cast<double>(t.mac.entries.size());
}
BENCHMARK(BM_BuildLookupTable)->Arg(50)->Arg(200)->Arg(2000);

static void BM_NestedLoopJoin(benchmark::State& state) {
  std::mt19937_64 rng(7);
  auto t = oracle::random_triple(rng, 1.0, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(oracle::nested_loop_join(t.mac, t.portnum, t.iface));
  }
}
BENCHMARK(BM_NestedLoopJoin)->Arg(50)->Arg(200)->Arg(2000);

static void BM_DiffTables(benchmark::State& state) {
  std::mt19937_64 rng(11);
  std::vector<MacAddress> pool;
  for (long i = 0; i < state.range(0); ++i) pool.push_back(oracle::random_mac(rng));
  auto a = oracle::random_table(rng, pool, 0.9);
  auto b = oracle::random_table(rng, pool, 0.9);
  for (auto _ : state) {
    benchmark::DoNotOptimize(diff_tables(a, b));
  }
}
BENCHMARK(BM_DiffTables)->Arg(100)->Arg(1000);

// A full three-table walk against the simulated switch over loopback.
static void BM_WalkSimSwitch(benchmark::State& state) {
  sim::SimSwitch sw("public");
  std::mt19937_64 rng(3);
  for (long i = 0; i < state.range(0); ++i) sw.attach(oracle::random_mac(rng), 1 + static_cast<int>(i % 48));
  snmp::SnmpClient client(sw.endpoint(), "public");
  for (auto _ : state) {
    benchmark::DoNotOptimize(snmp::retrieve_lookup_table(client, snmp::TableRoots::defaults()));
  }
}
BENCHMARK(BM_WalkSimSwitch)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);
