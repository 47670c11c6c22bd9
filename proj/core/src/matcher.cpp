#include "selfheal/matcher.hpp"

#include <stdexcept>
#include <tuple>

namespace selfheal {

const char* to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::WrongPort: return "WrongPort";
    case RejectReason::DiscoveredBeforeFailure: return "DiscoveredBeforeFailure";
    case RejectReason::ProfileUnknown: return "ProfileUnknown";
    case RejectReason::TypeMismatch: return "TypeMismatch";
    case RejectReason::HardwareParamMismatch: return "HardwareParamMismatch";
    case RejectReason::Busy: return "Busy";
  }
  return "?";
}

std::optional<RejectReason> evaluate_candidate(const DeviceRecord& failed, const DeviceRecord& candidate,
                                               const ConfigSnapshot& snapshot, const MatchPolicy& policy,
                                               const std::set<MacAddress>& busy) {
  if (!policy.allow_cross_port && (!failed.port || candidate.port != failed.port)) return RejectReason::WrongPort;
  if (failed.open_failure && candidate.discovered_at_generation <= failed.open_failure->detected_at_generation) {
    return RejectReason::DiscoveredBeforeFailure;
  }
  if (!candidate.profile) return RejectReason::ProfileUnknown;
  if (candidate.profile->device_type != snapshot.profile.device_type) return RejectReason::TypeMismatch;

  const auto& want = snapshot.profile.hardware_params;
  const auto& have = candidate.profile->hardware_params;
  auto matches = [&](const std::string& key) {
    auto w = want.find(key);
    auto h = have.find(key);
    if (w == want.end()) return h == have.end();
    return h != have.end() && h->second == w->second;
  };
  if (policy.required_params) {
    for (const auto& key : *policy.required_params) {
      if (!matches(key)) return RejectReason::HardwareParamMismatch;
    }
  } else {
    for (const auto& [key, value] : want) {
      if (!matches(key)) return RejectReason::HardwareParamMismatch;
    }
  }
  if (busy.contains(candidate.mac)) return RejectReason::Busy;
  return std::nullopt;
}

MatchDecision select_replacement(const DeviceRecord& failed, std::span<const DeviceRecord> candidates,
                                 const ConfigSnapshot& snapshot, const MatchPolicy& policy,
                                 const std::set<MacAddress>& busy) {
  if (!failed.open_failure) throw std::invalid_argument("device " + failed.mac.str() + " has no open failure");

  MatchDecision decision;
  decision.failed = failed.mac;
  const DeviceRecord* best = nullptr;
  for (const auto& c : candidates) {
    if (auto reason = evaluate_candidate(failed, c, snapshot, policy, busy)) {
      decision.rejected.emplace_back(c.mac, *reason);
      continue;
    }
    if (best == nullptr ||
        std::tie(c.discovered_at_generation, c.mac) < std::tie(best->discovered_at_generation, best->mac)) {
      best = &c;
    }
  }
  if (best != nullptr) decision.chosen = best->mac;
  return decision;
}

}  // namespace selfheal
