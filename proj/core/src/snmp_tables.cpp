#include "selfheal/snmp_tables.hpp"

#include <cstdio>
#include <unordered_map>

namespace selfheal::snmp {

namespace {

struct SuffixHash {
  std::size_t operator()(const OidSuffix& s) const noexcept {
    std::size_t h = 1469598103934665603ULL;
    for (auto a : s) h = (h ^ a) * 1099511628211ULL;
    return h;
  }
};

std::optional<std::int64_t> as_integer(const Value& v) {
  if (auto i = std::get_if<std::int64_t>(&v)) return *i;
  if (auto u = std::get_if<Unsigned32>(&v)) return u->value;
  return std::nullopt;
}

}  // namespace

TableRoots TableRoots::defaults() {
  return TableRoots{Oid::parse(kDefaultMacTableOid), Oid::parse(kDefaultPortTableOid),
                    Oid::parse(kDefaultIfaceTableOid)};
}

std::set<PortMac> SwitchLookupTable::pairs() const {
  std::set<PortMac> out;
  for (const auto& [port, row] : ports) {
    for (const auto& mac : row.macs) out.emplace(port, mac);
  }
  return out;
}

std::optional<BridgePort> SwitchLookupTable::port_of(const MacAddress& mac) const {
  for (const auto& [port, row] : ports) {
    if (row.macs.contains(mac)) return port;
  }
  return std::nullopt;
}

std::size_t SwitchLookupTable::mac_count() const {
  std::size_t n = 0;
  for (const auto& [port, row] : ports) n += row.macs.size();
  return n;
}

JoinConflict::JoinConflict(MacAddress mac, BridgePort first, BridgePort second)
    : std::runtime_error("MAC " + mac.str() + " learned on ports " + std::to_string(first) + " and " +
                         std::to_string(second)),
      mac_(mac),
      first_(first),
      second_(second) {}

MacTable retrieve_mac_table(SnmpClient& client, const Oid& root) {
  MacTable table;
  for (auto& vb : client.walk(root)) {
    const auto* bytes = std::get_if<Bytes>(&vb.value);
    std::optional<MacAddress> mac;
    if (bytes != nullptr) mac = MacAddress::from_bytes(*bytes);
    if (!mac) {
      ++table.skipped;
      continue;
    }
    table.entries.push_back(MacEntry{vb.oid.suffix_after(root), *mac});
  }
  return table;
}

PortNumberTable retrieve_port_number_table(SnmpClient& client, const Oid& root) {
  PortNumberTable table;
  for (auto& vb : client.walk(root)) {
    auto value = as_integer(vb.value);
    if (!value) {
      throw SnmpError(SnmpError::Kind::MalformedResponse, "port number table value at " + vb.oid.str() +
                                                              " is not an INTEGER");
    }
    if (*value < 1 || *value > INT32_MAX) {
      ++table.skipped;
      continue;
    }
    table.entries.push_back(PortNumberEntry{vb.oid.suffix_after(root), static_cast<BridgePort>(*value)});
  }
  return table;
}

InterfaceTable retrieve_interface_table(SnmpClient& client, const Oid& root) {
  InterfaceTable table;
  for (auto& vb : client.walk(root)) {
    const auto arc = vb.oid.arcs().back();
    std::string name;
    if (const auto* bytes = std::get_if<Bytes>(&vb.value)) {
      name.assign(bytes->begin(), bytes->end());
    } else if (auto i = as_integer(vb.value)) {
      // Standard bridge MIB serves an ifIndex here rather than a name.
      name = "if" + std::to_string(*i);
    }
    if (name.empty() || arc < 1 || arc > static_cast<std::uint32_t>(INT32_MAX)) {
      ++table.skipped;
      continue;
    }
    auto [it, inserted] = table.names.emplace(static_cast<BridgePort>(arc), std::move(name));
    if (!inserted) {
      throw SnmpError(SnmpError::Kind::MalformedResponse,
                      "duplicate bridge port " + std::to_string(arc) + " in interface table");
    }
  }
  return table;
}

SwitchLookupTable build_lookup_table(const MacTable& mac, const PortNumberTable& portnum,
                                     const InterfaceTable& iface, JoinStats* stats) {
  JoinStats local;
  std::unordered_map<OidSuffix, BridgePort, SuffixHash> port_by_index;
  port_by_index.reserve(portnum.entries.size());
  for (const auto& e : portnum.entries) port_by_index.emplace(e.fdb_index, e.bridge_port);

  std::unordered_map<OidSuffix, bool, SuffixHash> mac_indices;
  mac_indices.reserve(mac.entries.size());

  SwitchLookupTable table;
  std::unordered_map<MacAddress, BridgePort> seen;
  for (const auto& e : mac.entries) {
    mac_indices.emplace(e.fdb_index, true);
    auto p = port_by_index.find(e.fdb_index);
    if (p == port_by_index.end()) {
      ++local.missing_port;
      continue;
    }
    auto name = iface.names.find(p->second);
    if (name == iface.names.end()) {
      ++local.missing_iface;
      continue;
    }
    auto [it, inserted] = seen.emplace(e.mac, p->second);
    if (!inserted && it->second != p->second) throw JoinConflict(e.mac, it->second, p->second);
    auto& row = table.ports[p->second];
    row.if_name = name->second;
    row.macs.insert(e.mac);
  }
  for (const auto& e : portnum.entries) {
    if (!mac_indices.contains(e.fdb_index)) ++local.missing_mac;
  }
  if (stats != nullptr) *stats = local;
  return table;
}

SwitchLookupTable retrieve_lookup_table(SnmpClient& client, const TableRoots& roots, RoundDiagnostics* diag) {
  auto mac = retrieve_mac_table(client, roots.mac_table);
  auto portnum = retrieve_port_number_table(client, roots.port_table);
  auto iface = retrieve_interface_table(client, roots.iface_table);
  JoinStats join;
  auto table = build_lookup_table(mac, portnum, iface, &join);
  if (diag != nullptr) {
    diag->skipped_mac = mac.skipped;
    diag->skipped_port = portnum.skipped;
    diag->skipped_iface = iface.skipped;
    diag->join = join;
  }
  return table;
}

std::string to_canonical_text(const SwitchLookupTable& table) {
  std::string out;
  for (const auto& [port, row] : table.ports) {
    out += std::to_string(port);
    out += '\t';
    out += row.if_name;
    out += '\t';
    bool first = true;
    for (const auto& mac : row.macs) {
      if (!first) out += ',';
      out += mac.str();
      first = false;
    }
    out += '\n';
  }
  return out;
}

std::string format_lookup_table(const SwitchLookupTable& table) {
  std::string out = "PORT  IFNAME        MACS\n";
  char buf[64];
  for (const auto& [port, row] : table.ports) {
    std::snprintf(buf, sizeof buf, "%-5d %-13s ", port, row.if_name.c_str());
    out += buf;
    bool first = true;
    for (const auto& mac : row.macs) {
      if (!first) out += ',';
      out += mac.str();
      first = false;
    }
    out += '\n';
  }
  return out;
}

}  // namespace selfheal::snmp
