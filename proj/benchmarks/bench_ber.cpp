#include <benchmark/benchmark.h>

#include "selfheal/ber.hpp"

using namespace selfheal;
using namespace selfheal::snmp;

namespace {

Message response() {
  Message m;
  m.community = "public";
  m.type = PduType::Response;
  m.request_id = 0x1234;
  m.varbinds.push_back({Oid::parse(".1.3.6.1.2.1.17.4.3.1.2.2.0.0.0.1.1"), std::int64_t{17}});
  m.varbinds.push_back({Oid::parse(".1.3.6.1.2.1.2.2.1.2.17"), Bytes{'G', 'i', '0', '/', '1', '7'}});
  return m;
}

}  // namespace

static void BM_BerEncode(benchmark::State& state) {
  const auto m = response();
  for (auto _ : state) benchmark::DoNotOptimize(encode(m));
}
BENCHMARK(BM_BerEncode);

static void BM_BerDecode(benchmark::State& state) {
  const auto wire = encode(response());
  for (auto _ : state) benchmark::DoNotOptimize(decode(wire));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * wire.size()));
}
BENCHMARK(BM_BerDecode);
