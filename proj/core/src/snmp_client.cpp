#include "selfheal/snmp_client.hpp"

#include <chrono>
#include <random>

namespace selfheal::snmp {

const char* to_string(SnmpError::Kind kind) {
  switch (kind) {
    case SnmpError::Kind::Timeout: return "Timeout";
    case SnmpError::Kind::AuthFailure: return "AuthFailure";
    case SnmpError::Kind::MalformedResponse: return "MalformedResponse";
  }
  return "?";
}

SnmpClient::SnmpClient(net::Endpoint agent, std::string community, SnmpClientOptions options)
    : agent_(std::move(agent)),
      community_(std::move(community)),
      options_(options),
      socket_(net::UdpSocket::unbound()),
      next_request_id_(static_cast<std::int32_t>(std::random_device{}() & 0x3fffffff)) {
  if (community_.empty()) throw std::invalid_argument("SNMP community must not be empty");
}

Message SnmpClient::exchange(const Message& request) {
  const auto wire = encode(request);
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    socket_.send_to(agent_, wire);
    const auto deadline = std::chrono::steady_clock::now() + options_.timeout;
    for (;;) {
      auto left = std::chrono::duration_cast<net::Timeout>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) break;
      auto datagram = socket_.recv_from(left);
      if (!datagram) continue;
      Message reply;
      try {
        reply = decode(*datagram);
      } catch (const BerError& e) {
        throw SnmpError(SnmpError::Kind::MalformedResponse, std::string("undecodable response: ") + e.what());
      }
      // Late replies to earlier attempts carry stale ids.
      if (reply.request_id != request.request_id) continue;
      if (reply.type != PduType::Response) {
        throw SnmpError(SnmpError::Kind::MalformedResponse, "reply is not a Response PDU");
      }
      return reply;
    }
  }
  throw SnmpError(SnmpError::Kind::Timeout, "no response from " + agent_.str());
}

VarBind SnmpClient::get_next(const Oid& oid) {
  Message req;
  req.community = community_;
  req.type = PduType::GetNext;
  req.request_id = next_request_id_++;
  if (next_request_id_ < 0) next_request_id_ = 1;
  req.varbinds.push_back(VarBind{oid, Null{}});

  auto reply = exchange(req);
  if (reply.error_status == static_cast<std::int32_t>(ErrorStatus::AuthorizationError) ||
      reply.error_status == static_cast<std::int32_t>(ErrorStatus::NoAccess)) {
    throw SnmpError(SnmpError::Kind::AuthFailure, "agent rejected community");
  }
  if (reply.error_status == static_cast<std::int32_t>(ErrorStatus::NoSuchName)) {
    // v1-style end of MIB.
    return VarBind{oid, EndOfMibView{}};
  }
  if (reply.error_status != 0) {
    throw SnmpError(SnmpError::Kind::MalformedResponse,
                    "agent error-status " + std::to_string(reply.error_status));
  }
  if (reply.varbinds.size() != 1) {
    throw SnmpError(SnmpError::Kind::MalformedResponse, "expected exactly one varbind");
  }
  return std::move(reply.varbinds.front());
}

std::vector<VarBind> SnmpClient::walk(const Oid& root) {
  std::vector<VarBind> out;
  Oid cursor = root;
  for (;;) {
    auto vb = get_next(cursor);
    if (std::holds_alternative<EndOfMibView>(vb.value) || std::holds_alternative<NoSuchObject>(vb.value) ||
        std::holds_alternative<NoSuchInstance>(vb.value)) {
      break;
    }
    if (!vb.oid.is_under(root)) break;
    if (!(cursor < vb.oid)) {
      throw SnmpError(SnmpError::Kind::MalformedResponse, "agent returned non-increasing OID " + vb.oid.str());
    }
    cursor = vb.oid;
    out.push_back(std::move(vb));
  }
  return out;
}

std::vector<VarBind> snmp_walk(const net::Endpoint& agent, const std::string& community, const Oid& root,
                               SnmpClientOptions options) {
  SnmpClient client(agent, community, options);
  return client.walk(root);
}

}  // namespace selfheal::snmp
