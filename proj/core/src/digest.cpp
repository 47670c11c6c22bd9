#include "selfheal/digest.hpp"

#include <cstdio>
#include <stdexcept>

namespace selfheal {

namespace {
constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kPrime = 0x100000001b3ULL;
}  // namespace

std::uint64_t digest(std::span<const std::uint8_t> data) {
  std::uint64_t h = kOffset;
  for (auto b : data) {
    h ^= b;
    h *= kPrime;
  }
  return h;
}

std::uint64_t digest(std::string_view data) {
  return digest(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

std::string digest_hex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::uint64_t parse_digest_hex(std::string_view hex) {
  if (hex.empty() || hex.size() > 16) throw std::invalid_argument("bad digest");
  std::uint64_t v = 0;
  for (char c : hex) {
    v <<= 4;
    if (c >= '0' && c <= '9') v |= static_cast<std::uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint64_t>(c - 'a' + 10);
    else throw std::invalid_argument("bad digest");
  }
  return v;
}

Bytes to_bytes(std::string_view text) { return Bytes(text.begin(), text.end()); }

std::string to_string(std::span<const std::uint8_t> data) {
  return std::string(data.begin(), data.end());
}

}  // namespace selfheal
