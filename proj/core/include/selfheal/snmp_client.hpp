#pragma once

#include <atomic>
#include <stdexcept>
#include <string>
#include <vector>

#include "selfheal/ber.hpp"
#include "selfheal/net.hpp"
#include "selfheal/oid.hpp"

namespace selfheal::snmp {

class SnmpError : public std::runtime_error {
 public:
  enum class Kind {
    Timeout,            // agent silent after all retries
    AuthFailure,        // community rejected
    MalformedResponse,  // protocol violation; the round must be abandoned
  };
  SnmpError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

const char* to_string(SnmpError::Kind kind);

struct SnmpClientOptions {
  net::Timeout timeout{1000};
  int retries = 2;
};

// SNMPv2c manager over UDP. One outstanding request at a time.
class SnmpClient {
 public:
  // Throws std::invalid_argument on an empty community.
  SnmpClient(net::Endpoint agent, std::string community, SnmpClientOptions options = {});

  VarBind get_next(const Oid& oid);

  // Every varbind strictly under `root`, in increasing OID order.
  std::vector<VarBind> walk(const Oid& root);

  const net::Endpoint& agent() const { return agent_; }

 private:
  Message exchange(const Message& request);

  net::Endpoint agent_;
  std::string community_;
  SnmpClientOptions options_;
  net::UdpSocket socket_;
  std::int32_t next_request_id_;
};

std::vector<VarBind> snmp_walk(const net::Endpoint& agent, const std::string& community, const Oid& root,
                               SnmpClientOptions options = {});

}  // namespace selfheal::snmp
