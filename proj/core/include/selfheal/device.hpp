#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "selfheal/clock.hpp"
#include "selfheal/mac_address.hpp"

namespace selfheal {

class Ipv4 {
 public:
  Ipv4() = default;
  explicit Ipv4(std::uint32_t host_order) : value_(host_order) {}
  static Ipv4 parse(std::string_view text);

  std::uint32_t value() const { return value_; }
  std::string str() const;
  auto operator<=>(const Ipv4&) const = default;

 private:
  std::uint32_t value_ = 0;
};

struct IpConfig {
  Ipv4 ip;
  bool dhcp_enabled = false;
  bool operator==(const IpConfig&) const = default;
};

// Dotted-integer firmware version, 1 to 4 components.
class FirmwareVersion {
 public:
  FirmwareVersion() : parts_{0} {}
  // Throws std::invalid_argument.
  static FirmwareVersion parse(std::string_view text);

  const std::vector<std::uint32_t>& parts() const { return parts_; }
  std::string str() const;
  bool operator==(const FirmwareVersion&) const = default;

 private:
  std::vector<std::uint32_t> parts_;
};

struct HardwareProfile {
  std::string device_type;
  std::map<std::string, std::string> hardware_params;
  FirmwareVersion firmware_version;
  bool operator==(const HardwareProfile&) const = default;
};

// The identity settings that make a device "the same device" to the rest of
// the system.
struct Characteristics {
  std::uint32_t device_address = 0;
  IpConfig ip_config;
  bool operator==(const Characteristics&) const = default;
};

enum class DeviceStatus { Online, Unreachable, ReportedFailed, Healing, Retired, Candidate };

const char* to_string(DeviceStatus status);

enum class FailureCause { LinkLoss, Reported };

const char* to_string(FailureCause cause);

struct FailureEvent {
  MacAddress mac;
  FailureCause cause = FailureCause::LinkLoss;
  std::uint64_t detected_at_generation = 0;
  Duration detected_at{};
  bool operator==(const FailureEvent&) const = default;
};

struct DeviceRecord {
  MacAddress mac;
  // Both are learned by interrogating the device and are empty until then.
  std::optional<Characteristics> characteristics;
  std::optional<HardwareProfile> profile;
  std::optional<std::int32_t> port;
  DeviceStatus status = DeviceStatus::Online;
  std::uint64_t last_seen_generation = 0;
  std::uint64_t discovered_at_generation = 0;
  Duration discovered_at{};
  // Consecutive rounds the MAC has been absent from the switch table.
  int miss_count = 0;
  std::optional<FailureEvent> open_failure;
  // Last configuration revision captured into the snapshot store.
  std::optional<std::uint32_t> snapshot_revision;
  bool needs_snapshot = false;

  bool operator==(const DeviceRecord&) const = default;
};

}  // namespace selfheal
