#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "selfheal/clock.hpp"
#include "selfheal/mac_address.hpp"
#include "selfheal/oid.hpp"
#include "selfheal/snmp_client.hpp"

// Retrieval of the three switch tables and their join into the per-port
// lookup table (port -> interface name -> learned MACs).
namespace selfheal::snmp {

// The three table roots. Configurable; the defaults are the values the
// simulated switch serves.
struct TableRoots {
  Oid mac_table;
  Oid port_table;
  Oid iface_table;

  static TableRoots defaults();
};

inline constexpr const char* kDefaultMacTableOid = ".1.3.6.1.4.1.9.9.46.1.3.1.1.2";
inline constexpr const char* kDefaultPortTableOid = ".1.3.6.1.2.1.17.4.3.1.2";
inline constexpr const char* kDefaultIfaceTableOid = ".1.3.6.1.2.1.17.1.4.1.2";

using BridgePort = std::int32_t;

struct MacEntry {
  OidSuffix fdb_index;
  MacAddress mac;
};

struct MacTable {
  std::vector<MacEntry> entries;
  std::size_t skipped = 0;  // varbinds whose value was not a 6-octet string
};

struct PortNumberEntry {
  OidSuffix fdb_index;
  BridgePort bridge_port = 0;
};

struct PortNumberTable {
  std::vector<PortNumberEntry> entries;
  std::size_t skipped = 0;  // non-positive port numbers
};

struct InterfaceTable {
  std::map<BridgePort, std::string> names;
  std::size_t skipped = 0;  // empty names, non-positive port arcs
};

struct PortRow {
  std::string if_name;
  std::set<MacAddress> macs;
  bool operator==(const PortRow&) const = default;
};

using PortMac = std::pair<BridgePort, MacAddress>;

struct SwitchLookupTable {
  std::map<BridgePort, PortRow> ports;
  Duration retrieved_at{};
  std::uint64_t generation = 0;

  std::set<PortMac> pairs() const;
  std::optional<BridgePort> port_of(const MacAddress& mac) const;
  std::size_t mac_count() const;
};

// Rows dropped by the join, per missing leg.
struct JoinStats {
  std::size_t missing_port = 0;   // fdbIndex in the MAC table only
  std::size_t missing_mac = 0;    // fdbIndex in the port table only
  std::size_t missing_iface = 0;  // bridge port absent from the interface table
  bool operator==(const JoinStats&) const = default;
};

// The same MAC joined to two different bridge ports in one round.
class JoinConflict : public std::runtime_error {
 public:
  JoinConflict(MacAddress mac, BridgePort first, BridgePort second);
  const MacAddress& mac() const { return mac_; }
  BridgePort first_port() const { return first_; }
  BridgePort second_port() const { return second_; }

 private:
  MacAddress mac_;
  BridgePort first_;
  BridgePort second_;
};

MacTable retrieve_mac_table(SnmpClient& client, const Oid& root);
PortNumberTable retrieve_port_number_table(SnmpClient& client, const Oid& root);
InterfaceTable retrieve_interface_table(SnmpClient& client, const Oid& root);

SwitchLookupTable build_lookup_table(const MacTable& mac, const PortNumberTable& portnum,
                                     const InterfaceTable& iface, JoinStats* stats = nullptr);

struct RoundDiagnostics {
  std::size_t skipped_mac = 0;
  std::size_t skipped_port = 0;
  std::size_t skipped_iface = 0;
  JoinStats join;
};

// Three back-to-back walks plus the join. generation/retrieved_at are left
// for the caller to stamp.
SwitchLookupTable retrieve_lookup_table(SnmpClient& client, const TableRoots& roots,
                                        RoundDiagnostics* diag = nullptr);

// One row per port: "<port>\t<ifName>\t<mac>,<mac>...", ascending port,
// ascending MAC. Identical tables give identical text.
std::string to_canonical_text(const SwitchLookupTable& table);

// Human-oriented table with a header row.
std::string format_lookup_table(const SwitchLookupTable& table);

}  // namespace selfheal::snmp
