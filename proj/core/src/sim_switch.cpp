#include "selfheal/sim_switch.hpp"

namespace selfheal::sim {

using snmp::Oid;
using snmp::Value;

SimSwitch::SimSwitch(std::string community, snmp::TableRoots roots)
    : community_(std::move(community)), roots_(std::move(roots)), socket_(net::UdpSocket::bind("127.0.0.1", 0)) {
  thread_ = std::thread([this] { serve(); });
}

SimSwitch::~SimSwitch() {
  stop_ = true;
  if (thread_.joinable()) thread_.join();
}

void SimSwitch::attach(const MacAddress& mac, std::int32_t port) {
  if (port < 1) throw std::invalid_argument("bridge ports start at 1");
  std::lock_guard lock(mu_);
  if (!ports_.emplace(mac, port).second) throw SimError(SimError::Kind::DuplicateMac, mac.str() + " already attached");
}

void SimSwitch::detach(const MacAddress& mac) {
  std::lock_guard lock(mu_);
  if (ports_.erase(mac) == 0) throw SimError(SimError::Kind::UnknownMac, mac.str() + " is not attached");
}

std::optional<std::int32_t> SimSwitch::port_of(const MacAddress& mac) const {
  std::lock_guard lock(mu_);
  auto it = ports_.find(mac);
  if (it == ports_.end()) return std::nullopt;
  return it->second;
}

std::map<MacAddress, std::int32_t> SimSwitch::attachments() const {
  std::lock_guard lock(mu_);
  return ports_;
}

void SimSwitch::inject(snmp::VarBind vb) {
  std::lock_guard lock(mu_);
  injected_.push_back(std::move(vb));
}

void SimSwitch::clear_injected() {
  std::lock_guard lock(mu_);
  injected_.clear();
}

std::map<Oid, Value> SimSwitch::build_view() const {
  std::lock_guard lock(mu_);
  std::map<Oid, Value> view;
  std::map<std::int32_t, bool> used_ports;
  for (const auto& [mac, port] : ports_) {
    std::vector<std::uint32_t> idx(mac.octets().begin(), mac.octets().end());
    view[roots_.mac_table.child(idx)] = Bytes(mac.octets().begin(), mac.octets().end());
    view[roots_.port_table.child(idx)] = static_cast<std::int64_t>(port);
    used_ports[port] = true;
  }
  for (const auto& [port, _] : used_ports) {
    view[roots_.iface_table.child(static_cast<std::uint32_t>(port))] = to_bytes("Gi0/" + std::to_string(port));
  }
  for (const auto& vb : injected_) view[vb.oid] = vb.value;
  return view;
}

void SimSwitch::serve() {
  while (!stop_) {
    net::Endpoint from;
    auto packet = socket_.recv_from(net::Timeout(50), &from);
    if (!packet || down_) continue;
    snmp::Message req;
    try {
      req = snmp::decode(*packet);
    } catch (const snmp::BerError&) {
      continue;
    }
    snmp::Message resp = req;
    resp.type = snmp::PduType::Response;
    if (req.community != community_) {
      resp.error_status = static_cast<std::int32_t>(snmp::ErrorStatus::AuthorizationError);
      resp.error_index = 0;
    } else {
      const auto view = build_view();
      for (auto& vb : resp.varbinds) {
        if (req.type == snmp::PduType::GetNext) {
          auto it = view.upper_bound(vb.oid);
          if (it == view.end()) {
            vb.value = snmp::EndOfMibView{};
          } else {
            vb.oid = it->first;
            vb.value = it->second;
          }
        } else {
          auto it = view.find(vb.oid);
          vb.value = it == view.end() ? Value(snmp::NoSuchInstance{}) : it->second;
        }
      }
    }
    ++served_;
    try {
      socket_.send_to(from, snmp::encode(resp));
    } catch (const std::exception&) {
    }
  }
}

}  // namespace selfheal::sim
