#include "selfheal/oid.hpp"

#include <algorithm>
#include <stdexcept>

namespace selfheal::snmp {

Oid::Oid(std::vector<std::uint32_t> arcs) : arcs_(std::move(arcs)) {
  if (arcs_.size() < 2) throw std::invalid_argument("OID needs at least two arcs");
}

Oid Oid::parse(std::string_view text) {
  if (!text.empty() && text.front() == '.') text.remove_prefix(1);
  std::vector<std::uint32_t> arcs;
  std::uint64_t cur = 0;
  bool have_digit = false;
  for (char c : text) {
    if (c == '.') {
      if (!have_digit) throw std::invalid_argument("empty OID arc");
      arcs.push_back(static_cast<std::uint32_t>(cur));
      cur = 0;
      have_digit = false;
    } else if (c >= '0' && c <= '9') {
      cur = cur * 10 + static_cast<std::uint64_t>(c - '0');
      if (cur > 0xffffffffULL) throw std::invalid_argument("OID arc out of range");
      have_digit = true;
    } else {
      throw std::invalid_argument("bad OID character");
    }
  }
  if (!have_digit) throw std::invalid_argument("empty OID arc");
  arcs.push_back(static_cast<std::uint32_t>(cur));
  return Oid(std::move(arcs));
}

std::string Oid::str() const {
  std::string out;
  for (auto a : arcs_) {
    out += '.';
    out += std::to_string(a);
  }
  return out;
}

bool Oid::is_under(const Oid& root) const {
  return arcs_.size() > root.arcs_.size() &&
         std::equal(root.arcs_.begin(), root.arcs_.end(), arcs_.begin());
}

std::vector<std::uint32_t> Oid::suffix_after(const Oid& root) const {
  return {arcs_.begin() + static_cast<std::ptrdiff_t>(root.arcs_.size()), arcs_.end()};
}

Oid Oid::child(std::span<const std::uint32_t> suffix) const {
  auto arcs = arcs_;
  arcs.insert(arcs.end(), suffix.begin(), suffix.end());
  return Oid(std::move(arcs));
}

Oid Oid::child(std::uint32_t arc) const {
  auto arcs = arcs_;
  arcs.push_back(arc);
  return Oid(std::move(arcs));
}

std::string suffix_str(const OidSuffix& suffix) {
  std::string out;
  for (auto a : suffix) {
    if (!out.empty()) out += '.';
    out += std::to_string(a);
  }
  return out;
}

}  // namespace selfheal::snmp
