#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "selfheal/device.hpp"
#include "selfheal/snapshot_store.hpp"

namespace selfheal {

// Listed in evaluation order; a rejected candidate carries the first clause
// it fails.
enum class RejectReason {
  WrongPort,
  DiscoveredBeforeFailure,
  ProfileUnknown,
  TypeMismatch,
  HardwareParamMismatch,
  Busy,
};

const char* to_string(RejectReason reason);

struct MatchPolicy {
  bool allow_cross_port = false;
  // Hardware parameters that must match exactly. Unset means every key in
  // the snapshot.
  std::optional<std::set<std::string>> required_params;
};

struct MatchDecision {
  MacAddress failed;
  std::optional<MacAddress> chosen;
  std::vector<std::pair<MacAddress, RejectReason>> rejected;
};

// First clause `candidate` fails for replacing `failed`, or nullopt if it
// qualifies.
std::optional<RejectReason> evaluate_candidate(const DeviceRecord& failed, const DeviceRecord& candidate,
                                               const ConfigSnapshot& snapshot, const MatchPolicy& policy,
                                               const std::set<MacAddress>& busy = {});

// Picks the replacement for `failed` among `candidates`: same port, same
// device type, matching hardware parameters, discovered after the failure.
// Ties go to the earliest-discovered candidate, then the lowest MAC.
// Throws std::invalid_argument if `failed` has no open failure.
MatchDecision select_replacement(const DeviceRecord& failed, std::span<const DeviceRecord> candidates,
                                 const ConfigSnapshot& snapshot, const MatchPolicy& policy,
                                 const std::set<MacAddress>& busy = {});

}  // namespace selfheal
