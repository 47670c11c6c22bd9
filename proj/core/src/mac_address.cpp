#include "selfheal/mac_address.hpp"

#include <cstdio>
#include <stdexcept>

namespace selfheal {

namespace {
int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}
}  // namespace

MacAddress MacAddress::parse(std::string_view text) {
  if (text.size() != 17) throw std::invalid_argument("bad MAC address: " + std::string(text));
  std::array<std::uint8_t, 6> octets{};
  for (std::size_t i = 0; i < 6; ++i) {
    const auto pos = i * 3;
    int hi = hex_value(text[pos]);
    int lo = hex_value(text[pos + 1]);
    if (hi < 0 || lo < 0) throw std::invalid_argument("bad MAC address: " + std::string(text));
    if (i < 5 && text[pos + 2] != ':' && text[pos + 2] != '-') {
      throw std::invalid_argument("bad MAC address: " + std::string(text));
    }
    octets[i] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return MacAddress(octets);
}

std::optional<MacAddress> MacAddress::from_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != 6) return std::nullopt;
  std::array<std::uint8_t, 6> octets{};
  std::copy(bytes.begin(), bytes.end(), octets.begin());
  return MacAddress(octets);
}

std::string MacAddress::str() const {
  char buf[18];
  std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", octets_[0], octets_[1], octets_[2],
                octets_[3], octets_[4], octets_[5]);
  return buf;
}

}  // namespace selfheal
