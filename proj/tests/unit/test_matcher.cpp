#include <algorithm>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "selfheal/matcher.hpp"

using namespace selfheal;

namespace {

DeviceRecord failed_on(int port, std::uint64_t gen) {
  DeviceRecord r;
  r.mac = MacAddress::parse("02:00:00:00:00:01");
  r.port = port;
  r.status = DeviceStatus::Unreachable;
  r.open_failure = FailureEvent{r.mac, FailureCause::LinkLoss, gen, {}};
  return r;
}

ConfigSnapshot snapshot_of(const std::string& type, std::map<std::string, std::string> params) {
  ConfigSnapshot s;
  s.profile.device_type = type;
  s.profile.hardware_params = std::move(params);
  return s;
}

DeviceRecord cand(const char* mac, int port, std::uint64_t gen, const std::string& type,
                  std::map<std::string, std::string> params = {{"ch", "4"}}) {
  DeviceRecord r;
  r.mac = MacAddress::parse(mac);
  r.port = port;
  r.status = DeviceStatus::Candidate;
  r.discovered_at_generation = gen;
  HardwareProfile p;
  p.device_type = type;
  p.hardware_params = std::move(params);
  r.profile = p;
  return r;
}

}  // namespace

TEST_CASE("each rule rejects with its own reason") {
  auto f = failed_on(5, 10);
  auto snap = snapshot_of("A", {{"ch", "4"}});
  MatchPolicy policy;
  CHECK(evaluate_candidate(f, cand("02:00:00:00:00:02", 6, 11, "A"), snap, policy) == RejectReason::WrongPort);
  CHECK(evaluate_candidate(f, cand("02:00:00:00:00:02", 5, 10, "A"), snap, policy) ==
        RejectReason::DiscoveredBeforeFailure);
  auto unknown = cand("02:00:00:00:00:02", 5, 11, "A");
  unknown.profile.reset();
  CHECK(evaluate_candidate(f, unknown, snap, policy) == RejectReason::ProfileUnknown);
  CHECK(evaluate_candidate(f, cand("02:00:00:00:00:02", 5, 11, "B"), snap, policy) == RejectReason::TypeMismatch);
  CHECK(evaluate_candidate(f, cand("02:00:00:00:00:02", 5, 11, "A", {{"ch", "2"}}), snap, policy) ==
        RejectReason::HardwareParamMismatch);
  auto ok = cand("02:00:00:00:00:02", 5, 11, "A");
  CHECK_FALSE(evaluate_candidate(f, ok, snap, policy).has_value());
  CHECK(evaluate_candidate(f, ok, snap, policy, {ok.mac}) == RejectReason::Busy);
  MatchPolicy cross;
  cross.allow_cross_port = true;
  CHECK_FALSE(evaluate_candidate(f, cand("02:00:00:00:00:02", 6, 11, "A"), snap, cross).has_value());
  MatchPolicy only_type;
  only_type.required_params = std::set<std::string>{};
  CHECK_FALSE(evaluate_candidate(f, cand("02:00:00:00:00:02", 5, 11, "A", {{"ch", "2"}}), snap, only_type));
}

TEST_CASE("no open failure is a caller error") {
  auto f = failed_on(1, 1);
  f.open_failure.reset();
  std::vector<DeviceRecord> none;
  CHECK_THROWS_AS(select_replacement(f, none, ConfigSnapshot{}, MatchPolicy{}), std::invalid_argument);
}

TEST_CASE("selection agrees with the literal rule and ignores input order") {
  std::mt19937_64 rng(1234);
  const char* types[] = {"A", "B"};
  for (int trial = 0; trial < 300; ++trial) {
    auto f = failed_on(1 + static_cast<int>(rng() % 3), 5 + rng() % 3);
    auto snap = snapshot_of("A", {{"ch", rng() % 2 ? "4" : "2"}});
    std::vector<DeviceRecord> cands;
    const int n = static_cast<int>(rng() % 9);
    for (int i = 0; i < n; ++i) {
      auto mac = oracle::random_mac(rng);
      auto c = cand(mac.str().c_str(), 1 + static_cast<int>(rng() % 3), 3 + rng() % 7, types[rng() % 2],
                    {{"ch", rng() % 2 ? "4" : "2"}});
      if (rng() % 10 == 0) c.profile.reset();
      cands.push_back(c);
    }
    auto want = oracle::choose_replacement(f, cands, snap);
    auto got = select_replacement(f, cands, snap, MatchPolicy{});
    REQUIRE(got.chosen == want);
    CHECK(got.rejected.size() + (want ? 1 : 0) <= cands.size());
    for (int p = 0; p < 4; ++p) {
      std::shuffle(cands.begin(), cands.end(), rng);
      CHECK(select_replacement(f, cands, snap, MatchPolicy{}).chosen == want);
    }
  }
}
