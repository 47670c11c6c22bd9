#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace selfheal::snmp {

// An SNMP object identifier. Ordering is lexicographic over arcs, which is
// the order agents serve GetNext in.
class Oid {
 public:
  Oid() = default;
  // Throws std::invalid_argument if fewer than two arcs.
  explicit Oid(std::vector<std::uint32_t> arcs);

  // Accepts ".1.3.6.1" and "1.3.6.1".
  static Oid parse(std::string_view text);

  const std::vector<std::uint32_t>& arcs() const { return arcs_; }
  std::size_t size() const { return arcs_.size(); }

  // ".1.3.6.1.2.1.17.4.3.1.2"
  std::string str() const;

  // True iff `root` is a strict prefix of this OID.
  bool is_under(const Oid& root) const;

  // Arcs after `root`. Precondition: is_under(root).
  std::vector<std::uint32_t> suffix_after(const Oid& root) const;

  Oid child(std::span<const std::uint32_t> suffix) const;
  Oid child(std::uint32_t arc) const;

  auto operator<=>(const Oid&) const = default;
  bool operator==(const Oid&) const = default;

 private:
  std::vector<std::uint32_t> arcs_;
};

// Index part of a table row's OID, relative to the table root.
using OidSuffix = std::vector<std::uint32_t>;

std::string suffix_str(const OidSuffix& suffix);

}  // namespace selfheal::snmp
