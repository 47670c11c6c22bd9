#include "selfheal/device.hpp"

#include <stdexcept>

namespace selfheal {

Ipv4 Ipv4::parse(std::string_view text) {
  std::uint32_t value = 0;
  int parts = 0;
  std::uint32_t cur = 0;
  int digits = 0;
  auto flush = [&] {
    if (digits == 0 || cur > 255) throw std::invalid_argument("bad IPv4 address: " + std::string(text));
    value = (value << 8) | cur;
    ++parts;
    cur = 0;
    digits = 0;
  };
  for (char c : text) {
    if (c == '.') {
      flush();
    } else if (c >= '0' && c <= '9' && digits < 3) {
      cur = cur * 10 + static_cast<std::uint32_t>(c - '0');
      ++digits;
    } else {
      throw std::invalid_argument("bad IPv4 address: " + std::string(text));
    }
  }
  flush();
  if (parts != 4) throw std::invalid_argument("bad IPv4 address: " + std::string(text));
  return Ipv4(value);
}

std::string Ipv4::str() const {
  return std::to_string(value_ >> 24) + "." + std::to_string((value_ >> 16) & 0xff) + "." +
         std::to_string((value_ >> 8) & 0xff) + "." + std::to_string(value_ & 0xff);
}

FirmwareVersion FirmwareVersion::parse(std::string_view text) {
  FirmwareVersion v;
  v.parts_.clear();
  std::uint64_t cur = 0;
  bool have = false;
  for (char c : text) {
    if (c == '.') {
      if (!have) throw std::invalid_argument("bad firmware version: " + std::string(text));
      v.parts_.push_back(static_cast<std::uint32_t>(cur));
      cur = 0;
      have = false;
    } else if (c >= '0' && c <= '9') {
      cur = cur * 10 + static_cast<std::uint64_t>(c - '0');
      if (cur > 0xffffffffULL) throw std::invalid_argument("firmware version component too large");
      have = true;
    } else {
      throw std::invalid_argument("bad firmware version: " + std::string(text));
    }
  }
  if (!have) throw std::invalid_argument("bad firmware version: " + std::string(text));
  v.parts_.push_back(static_cast<std::uint32_t>(cur));
  if (v.parts_.size() > 4) throw std::invalid_argument("firmware version has more than 4 components");
  return v;
}

std::string FirmwareVersion::str() const {
  std::string out;
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    if (i) out += '.';
    out += std::to_string(parts_[i]);
  }
  return out;
}

const char* to_string(DeviceStatus status) {
  switch (status) {
    case DeviceStatus::Online: return "Online";
    case DeviceStatus::Unreachable: return "Unreachable";
    case DeviceStatus::ReportedFailed: return "ReportedFailed";
    case DeviceStatus::Healing: return "Healing";
    case DeviceStatus::Retired: return "Retired";
    case DeviceStatus::Candidate: return "Candidate";
  }
  return "?";
}

const char* to_string(FailureCause cause) {
  return cause == FailureCause::LinkLoss ? "LinkLoss" : "Reported";
}

}  // namespace selfheal
