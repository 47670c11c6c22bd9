#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace selfheal {

class MacAddress {
 public:
  MacAddress() = default;
  explicit MacAddress(std::array<std::uint8_t, 6> octets) : octets_(octets) {}

  // Accepts ':' or '-' separators, either case. Throws std::invalid_argument.
  static MacAddress parse(std::string_view text);
  static std::optional<MacAddress> from_bytes(std::span<const std::uint8_t> bytes);

  const std::array<std::uint8_t, 6>& octets() const { return octets_; }

  // Lowercase colon-separated: "aa:bb:cc:dd:ee:ff".
  std::string str() const;

  auto operator<=>(const MacAddress&) const = default;
  bool operator==(const MacAddress&) const = default;

 private:
  std::array<std::uint8_t, 6> octets_{};
};

}  // namespace selfheal

template <>
struct std::hash<selfheal::MacAddress> {
  std::size_t operator()(const selfheal::MacAddress& m) const noexcept {
    std::uint64_t v = 0;
    for (auto o : m.octets()) v = (v << 8) | o;
    return std::hash<std::uint64_t>{}(v);
  }
};
