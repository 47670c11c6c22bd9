#include "selfheal/device_link.hpp"

#include <fstream>
#include <sstream>

namespace selfheal::link {

void StaticResolver::add(const MacAddress& mac, DeviceEndpoints endpoints) {
  std::lock_guard lock(mu_);
  table_[mac] = std::move(endpoints);
}

std::optional<DeviceEndpoints> StaticResolver::resolve(const MacAddress& mac) const {
  std::lock_guard lock(mu_);
  auto it = table_.find(mac);
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

std::size_t StaticResolver::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open device map " + file.string());
  std::size_t added = 0;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string mac, conduit, ftp;
    if (!(fields >> mac)) continue;
    if (!(fields >> conduit >> ftp)) {
      throw std::runtime_error(file.string() + ":" + std::to_string(lineno) + ": expected <mac> <conduit> <ftp>");
    }
    ++added;
    add(MacAddress::parse(mac), DeviceEndpoints{net::parse_endpoint(conduit), net::parse_endpoint(ftp)});
  }
  return added;
}

DeviceLink::DeviceLink(const EndpointResolver& resolver, LinkOptions options)
    : resolver_(resolver), options_(std::move(options)) {}

DeviceEndpoints DeviceLink::endpoints_for(const MacAddress& mac) const {
  auto ep = resolver_.resolve(mac);
  if (!ep) throw ConduitError(ConduitError::Kind::Unreachable, "no endpoint known for " + mac.str());
  return *ep;
}

std::mutex& DeviceLink::session_lock(const MacAddress& mac) {
  std::lock_guard lock(sessions_mu_);
  auto& slot = sessions_[mac];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

ConduitMessage DeviceLink::request(const MacAddress& mac, Payload payload) {
  const auto ep = endpoints_for(mac);
  std::lock_guard session(session_lock(mac));
  return client_.send_request(ep.conduit, std::move(payload), options_.conduit_timeout);
}

InterrogateReply DeviceLink::interrogate(const MacAddress& mac) {
  auto reply = request(mac, Interrogate{});
  return std::get<InterrogateReply>(reply.payload);
}

Ack DeviceLink::heartbeat(const MacAddress& mac) {
  auto reply = request(mac, Heartbeat{});
  return std::get<Ack>(reply.payload);
}

TransferReceipt DeviceLink::put_file(const MacAddress& mac, const std::string& path,
                                     std::span<const std::uint8_t> bytes) {
  std::optional<DeviceEndpoints> ep = resolver_.resolve(mac);
  if (!ep) throw FtpError(FtpError::Kind::ConnectFailure, "no endpoint known for " + mac.str());
  std::lock_guard session(session_lock(mac));
  return ftp_put(ep->ftp, path, bytes, options_.ftp);
}

Bytes DeviceLink::get_file(const MacAddress& mac, const std::string& path) {
  std::optional<DeviceEndpoints> ep = resolver_.resolve(mac);
  if (!ep) throw FtpError(FtpError::Kind::ConnectFailure, "no endpoint known for " + mac.str());
  std::lock_guard session(session_lock(mac));
  return ftp_get(ep->ftp, path, options_.ftp);
}

}  // namespace selfheal::link
