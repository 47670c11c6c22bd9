#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "selfheal/device.hpp"
#include "selfheal/snmp_tables.hpp"

namespace selfheal {

class IllegalTransition : public std::logic_error {
 public:
  IllegalTransition(const MacAddress& mac, DeviceStatus from, DeviceStatus to);
};

// Online -> {Unreachable, ReportedFailed}
// {Unreachable, ReportedFailed} -> {Online, Retired}
// Candidate -> {Online, Healing}
// Healing -> {Online, Candidate}
bool is_legal_transition(DeviceStatus from, DeviceStatus to);

// The fleet's device records. Single writer; readers copy.
class Inventory {
 public:
  DeviceRecord* find(const MacAddress& mac);
  const DeviceRecord* find(const MacAddress& mac) const;

  // Throws std::logic_error if the MAC is already present.
  DeviceRecord& add(DeviceRecord record);
  void erase(const MacAddress& mac);

  // Throws IllegalTransition.
  void set_status(const MacAddress& mac, DeviceStatus to);

  const std::map<MacAddress, DeviceRecord>& records() const { return records_; }
  std::vector<MacAddress> with_status(DeviceStatus status) const;
  std::vector<MacAddress> open_failures() const;
  std::map<DeviceStatus, std::size_t> counts() const;
  std::size_t size() const { return records_.size(); }

  // Violated invariants as readable strings; empty when consistent. `latest`
  // enables the Online-implies-present check. Device addresses must be
  // unique among Online, Unreachable and ReportedFailed records.
  std::vector<std::string> check_invariants(const snmp::SwitchLookupTable* latest = nullptr) const;

 private:
  std::map<MacAddress, DeviceRecord> records_;
};

}  // namespace selfheal
