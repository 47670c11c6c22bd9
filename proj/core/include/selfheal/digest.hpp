#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace selfheal {

using Bytes = std::vector<std::uint8_t>;

// Project-wide 64-bit content digest (FNV-1a). Recorded by name in snapshot
// manifests so the algorithm can be changed without ambiguity.
inline constexpr std::string_view kDigestName = "fnv1a64";

std::uint64_t digest(std::span<const std::uint8_t> data);
std::uint64_t digest(std::string_view data);

std::string digest_hex(std::uint64_t value);
std::uint64_t parse_digest_hex(std::string_view hex);

Bytes to_bytes(std::string_view text);
std::string to_string(std::span<const std::uint8_t> data);

}  // namespace selfheal
