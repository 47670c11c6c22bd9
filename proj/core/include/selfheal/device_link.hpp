#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "selfheal/conduit.hpp"
#include "selfheal/ftp_client.hpp"
#include "selfheal/mac_address.hpp"

namespace selfheal::link {

inline constexpr const char* kFirmwareDir = "/firmware/";
inline constexpr const char* kConfigDir = "/config/";

struct DeviceEndpoints {
  net::Endpoint conduit;
  net::Endpoint ftp;
};

// Where to reach a device's services, by MAC.
class EndpointResolver {
 public:
  virtual ~EndpointResolver() = default;
  virtual std::optional<DeviceEndpoints> resolve(const MacAddress& mac) const = 0;
};

// Fixed table, typically loaded from a device map file with lines
//   <mac> <conduit host:port> <ftp host:port>
class StaticResolver final : public EndpointResolver {
 public:
  void add(const MacAddress& mac, DeviceEndpoints endpoints);
  std::optional<DeviceEndpoints> resolve(const MacAddress& mac) const override;

  // Adds every entry of a device map file. Returns the number of entries.
  std::size_t load(const std::filesystem::path& file);

 private:
  mutable std::mutex mu_;
  std::map<MacAddress, DeviceEndpoints> table_;
};

struct LinkOptions {
  net::Timeout conduit_timeout{2000};
  FtpOptions ftp;
};

// Both device transports behind one MAC-addressed facade. Requests to the
// same device are serialized; distinct devices proceed concurrently.
class DeviceLink {
 public:
  DeviceLink(const EndpointResolver& resolver, LinkOptions options);

  ConduitMessage request(const MacAddress& mac, Payload payload);
  InterrogateReply interrogate(const MacAddress& mac);
  Ack heartbeat(const MacAddress& mac);

  TransferReceipt put_file(const MacAddress& mac, const std::string& path, std::span<const std::uint8_t> bytes);
  Bytes get_file(const MacAddress& mac, const std::string& path);

  const LinkOptions& options() const { return options_; }
  std::uint64_t mismatched_replies() const { return client_.mismatched_replies(); }

 private:
  DeviceEndpoints endpoints_for(const MacAddress& mac) const;
  std::mutex& session_lock(const MacAddress& mac);

  const EndpointResolver& resolver_;
  LinkOptions options_;
  ConduitClient client_;
  std::mutex sessions_mu_;
  std::map<MacAddress, std::unique_ptr<std::mutex>> sessions_;
};

}  // namespace selfheal::link
