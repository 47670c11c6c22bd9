#include "selfheal/inventory.hpp"

#include <set>

namespace selfheal {

IllegalTransition::IllegalTransition(const MacAddress& mac, DeviceStatus from, DeviceStatus to)
    : std::logic_error("illegal status transition for " + mac.str() + ": " + to_string(from) + " -> " +
                       to_string(to)) {}

bool is_legal_transition(DeviceStatus from, DeviceStatus to) {
  using S = DeviceStatus;
  switch (from) {
    case S::Online: return to == S::Unreachable || to == S::ReportedFailed;
    case S::Unreachable:
    case S::ReportedFailed: return to == S::Online || to == S::Retired;
    case S::Candidate: return to == S::Online || to == S::Healing;
    case S::Healing: return to == S::Online || to == S::Candidate;
    case S::Retired: return false;
  }
  return false;
}

DeviceRecord* Inventory::find(const MacAddress& mac) {
  auto it = records_.find(mac);
  return it == records_.end() ? nullptr : &it->second;
}

const DeviceRecord* Inventory::find(const MacAddress& mac) const {
  auto it = records_.find(mac);
  return it == records_.end() ? nullptr : &it->second;
}

DeviceRecord& Inventory::add(DeviceRecord record) {
  auto mac = record.mac;
  auto [it, inserted] = records_.emplace(mac, std::move(record));
  if (!inserted) throw std::logic_error("device " + mac.str() + " already in inventory");
  return it->second;
}

void Inventory::erase(const MacAddress& mac) { records_.erase(mac); }

void Inventory::set_status(const MacAddress& mac, DeviceStatus to) {
  auto* rec = find(mac);
  if (rec == nullptr) throw std::logic_error("unknown device " + mac.str());
  if (!is_legal_transition(rec->status, to)) throw IllegalTransition(mac, rec->status, to);
  rec->status = to;
}

std::vector<MacAddress> Inventory::with_status(DeviceStatus status) const {
  std::vector<MacAddress> out;
  for (const auto& [mac, rec] : records_) {
    if (rec.status == status) out.push_back(mac);
  }
  return out;
}

std::vector<MacAddress> Inventory::open_failures() const {
  std::vector<MacAddress> out;
  for (const auto& [mac, rec] : records_) {
    if (rec.open_failure) out.push_back(mac);
  }
  return out;
}

std::map<DeviceStatus, std::size_t> Inventory::counts() const {
  std::map<DeviceStatus, std::size_t> out;
  for (const auto& [mac, rec] : records_) ++out[rec.status];
  return out;
}

std::vector<std::string> Inventory::check_invariants(const snmp::SwitchLookupTable* latest) const {
  std::vector<std::string> problems;
  std::map<std::uint32_t, MacAddress> addresses;
  for (const auto& [mac, rec] : records_) {
    if (rec.discovered_at_generation > rec.last_seen_generation) {
      problems.push_back(mac.str() + ": discovered after last seen");
    }
    if (rec.open_failure && rec.status != DeviceStatus::Unreachable && rec.status != DeviceStatus::ReportedFailed) {
      problems.push_back(mac.str() + ": open failure on a " + to_string(rec.status) + " device");
    }
    if (rec.status == DeviceStatus::Online && !rec.port) problems.push_back(mac.str() + ": Online but unbound");
    // A device inside its miss window is still Online by design.
    if (latest != nullptr && rec.status == DeviceStatus::Online && rec.miss_count == 0 && rec.port) {
      auto row = latest->ports.find(*rec.port);
      if (row == latest->ports.end() || !row->second.macs.contains(mac)) {
        problems.push_back(mac.str() + ": Online but absent from port " + std::to_string(*rec.port));
      }
    }
    // candidates and devices owned by a job carry identities in flux
    const bool in_service = rec.status == DeviceStatus::Online || rec.status == DeviceStatus::Unreachable ||
                            rec.status == DeviceStatus::ReportedFailed;
    if (in_service && rec.characteristics) {
      auto [it, inserted] = addresses.emplace(rec.characteristics->device_address, mac);
      if (!inserted) {
        problems.push_back("device address " + std::to_string(rec.characteristics->device_address) +
                           " held by " + it->second.str() + " and " + mac.str());
      }
    }
  }
  return problems;
}

}  // namespace selfheal
