#pragma once
// Independent reference implementations for the randomized checks. They are
// deliberately naive: nested loops, linear scans, no shared helpers with the
// code under test beyond the plain data types.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "selfheal/device.hpp"
#include "selfheal/snapshot_store.hpp"
#include "selfheal/snmp_tables.hpp"

namespace oracle {

using selfheal::MacAddress;
using namespace selfheal::snmp;

struct JoinRow {
  BridgePort port;
  std::string if_name;
  MacAddress mac;
  bool operator<(const JoinRow& o) const {
    return std::tie(port, mac, if_name) < std::tie(o.port, o.mac, o.if_name);
  }
  bool operator==(const JoinRow& o) const = default;
};

struct JoinResult {
  std::vector<JoinRow> rows;  // sorted
  JoinStats stats;
  bool conflict = false;
};

inline JoinResult nested_loop_join(const MacTable& mac, const PortNumberTable& portnum, const InterfaceTable& iface) {
  JoinResult r;
  for (const auto& m : mac.entries) {
    bool port_found = false;
    for (const auto& p : portnum.entries) {
      if (p.fdb_index != m.fdb_index) continue;
      port_found = true;
      bool iface_found = false;
      for (const auto& [ifport, name] : iface.names) {
        if (ifport != p.bridge_port) continue;
        iface_found = true;
        r.rows.push_back({p.bridge_port, name, m.mac});
      }
      if (!iface_found) ++r.stats.missing_iface;
      break;  // fdb indices are unique per table
    }
    if (!port_found) ++r.stats.missing_port;
  }
  for (const auto& p : portnum.entries) {
    bool found = false;
    for (const auto& m : mac.entries) found = found || m.fdb_index == p.fdb_index;
    if (!found) ++r.stats.missing_mac;
  }
  for (const auto& a : r.rows) {
    for (const auto& b : r.rows) {
      if (a.mac == b.mac && a.port != b.port) r.conflict = true;
    }
  }
  std::sort(r.rows.begin(), r.rows.end());
  r.rows.erase(std::unique(r.rows.begin(), r.rows.end()), r.rows.end());
  return r;
}

inline std::vector<JoinRow> flatten(const SwitchLookupTable& t) {
  std::vector<JoinRow> rows;
  for (const auto& [port, row] : t.ports) {
    for (const auto& mac : row.macs) rows.push_back({port, row.if_name, mac});
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

inline MacAddress random_mac(std::mt19937_64& rng) {
  std::array<std::uint8_t, 6> o{};
  for (auto& b : o) b = static_cast<std::uint8_t>(rng());
  o[0] = static_cast<std::uint8_t>((o[0] & 0xFE) | 0x02);
  return MacAddress(o);
}

struct Triple {
  MacTable mac;
  PortNumberTable portnum;
  InterfaceTable iface;
};

// `overlap` is the fraction of MAC-table indices that also appear in the
// port table, and of used bridge ports that appear in the interface table.
inline Triple random_triple(std::mt19937_64& rng, double overlap, std::size_t max_entries = 200) {
  Triple t;
  std::uniform_int_distribution<std::size_t> count(0, max_entries);
  std::uniform_int_distribution<BridgePort> port(1, 48);
  std::bernoulli_distribution keep(overlap);
  const auto n = count(rng);
  std::set<MacAddress> macs;
  while (macs.size() < n) macs.insert(random_mac(rng));
  std::set<BridgePort> used_ports;
  std::uint32_t extra_index = 1;
  for (const auto& m : macs) {
    OidSuffix idx(m.octets().begin(), m.octets().end());
    t.mac.entries.push_back({idx, m});
    if (keep(rng)) {
      const auto p = port(rng);
      t.portnum.entries.push_back({idx, p});
      used_ports.insert(p);
    }
  }
  // Port-table rows with no MAC row.
  const auto orphans = count(rng) / 10;
  for (std::size_t i = 0; i < orphans && overlap < 1.0; ++i) {
    t.portnum.entries.push_back({OidSuffix{0, 0, 0, 0, 0, extra_index++}, port(rng)});
  }
  for (BridgePort p = 1; p <= 48; ++p) {
    if (used_ports.contains(p) ? keep(rng) : std::bernoulli_distribution(0.3)(rng)) {
      t.iface.names[p] = "Gi0/" + std::to_string(p);
    }
  }
  std::shuffle(t.mac.entries.begin(), t.mac.entries.end(), rng);
  std::shuffle(t.portnum.entries.begin(), t.portnum.entries.end(), rng);
  return t;
}

inline SwitchLookupTable random_table(std::mt19937_64& rng, const std::vector<MacAddress>& pool, double presence) {
  SwitchLookupTable t;
  std::bernoulli_distribution present(presence);
  std::uniform_int_distribution<BridgePort> port(1, 8);
  for (const auto& m : pool) {
    if (!present(rng)) continue;
    const auto p = port(rng);
    t.ports[p].if_name = "Gi0/" + std::to_string(p);
    t.ports[p].macs.insert(m);
  }
  return t;
}

// (port, mac) pairs of `a` not in `b`, by linear scan.
inline std::set<std::pair<BridgePort, MacAddress>> minus(const SwitchLookupTable& a, const SwitchLookupTable& b) {
  std::set<std::pair<BridgePort, MacAddress>> out;
  for (const auto& [pa, ra] : a.ports) {
    for (const auto& ma : ra.macs) {
      bool found = false;
      for (const auto& [pb, rb] : b.ports) {
        for (const auto& mb : rb.macs) found = found || (pa == pb && ma == mb);
      }
      if (!found) out.insert({pa, ma});
    }
  }
  return out;
}

// The replacement rule written out literally: same port, discovered after
// the failure, same device type, equal hardware parameters; earliest
// discovered wins, then the lowest MAC.
inline std::optional<MacAddress> choose_replacement(const selfheal::DeviceRecord& failed,
                                                    const std::vector<selfheal::DeviceRecord>& candidates,
                                                    const selfheal::ConfigSnapshot& snapshot) {
  std::vector<const selfheal::DeviceRecord*> ok;
  for (const auto& c : candidates) {
    if (!failed.port || !c.port || *c.port != *failed.port) continue;
    if (c.discovered_at_generation <= failed.open_failure->detected_at_generation) continue;
    if (!c.profile) continue;
    if (c.profile->device_type != snapshot.profile.device_type) continue;
    if (c.profile->hardware_params != snapshot.profile.hardware_params) continue;
    ok.push_back(&c);
  }
  if (ok.empty()) return std::nullopt;
  const selfheal::DeviceRecord* best = ok.front();
  for (const auto* c : ok) {
    if (c->discovered_at_generation < best->discovered_at_generation ||
        (c->discovered_at_generation == best->discovered_at_generation && c->mac < best->mac)) {
      best = c;
    }
  }
  return best->mac;
}

}  // namespace oracle
