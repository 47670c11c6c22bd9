#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "selfheal/ber.hpp"
#include "selfheal/mac_address.hpp"
#include "selfheal/net.hpp"
#include "selfheal/snmp_tables.hpp"

namespace selfheal::sim {

class SimError : public std::runtime_error {
 public:
  enum class Kind { DuplicateMac, UnknownMac };
  SimError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// SNMPv2c agent serving the three forwarding tables over loopback UDP.
// Port p is reported with interface name "Gi0/<p>".
class SimSwitch {
 public:
  SimSwitch(std::string community, snmp::TableRoots roots = snmp::TableRoots::defaults());
  ~SimSwitch();
  SimSwitch(const SimSwitch&) = delete;
  SimSwitch& operator=(const SimSwitch&) = delete;

  net::Endpoint endpoint() const { return {"127.0.0.1", socket_.port()}; }
  const std::string& community() const { return community_; }

  // Throw SimError(DuplicateMac) / SimError(UnknownMac).
  void attach(const MacAddress& mac, std::int32_t port);
  void detach(const MacAddress& mac);
  std::optional<std::int32_t> port_of(const MacAddress& mac) const;
  std::map<MacAddress, std::int32_t> attachments() const;

  // While down, requests are dropped silently.
  void set_down(bool down) { down_ = down; }
  bool down() const { return down_; }

  // Extra varbinds served as-is, for malformed-table tests.
  void inject(snmp::VarBind vb);
  void clear_injected();

  std::uint64_t requests_served() const { return served_; }

 private:
  void serve();
  std::map<snmp::Oid, snmp::Value> build_view() const;

  std::string community_;
  snmp::TableRoots roots_;
  net::UdpSocket socket_;
  mutable std::mutex mu_;
  std::map<MacAddress, std::int32_t> ports_;
  std::vector<snmp::VarBind> injected_;
  std::atomic<bool> down_{false};
  std::atomic<bool> stop_{false};
  std::atomic<std::uint64_t> served_{0};
  std::thread thread_;
};

}  // namespace selfheal::sim
