#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "selfheal/clock.hpp"
#include "selfheal/conduit.hpp"
#include "selfheal/device.hpp"
#include "selfheal/device_link.hpp"

namespace selfheal::sim {

struct SimDeviceSpec {
  std::string name;
  MacAddress mac;
  HardwareProfile profile;
  Characteristics characteristics;
  // Active configuration files, by logical name.
  std::map<std::string, Bytes> config_files;
  Duration reboot_delay = std::chrono::seconds(2);
};

// One entry per conduit request or FTP transfer the device served.
struct DeviceMessage {
  Duration at{};
  std::string kind;  // conduit request kind, "STOR" or "RETR"
  std::string detail;
  std::uint64_t bytes = 0;
};

// A field device: conduit and FTP listeners on loopback, its stored files,
// characteristics and firmware, plus fault switches.
class SimDevice {
 public:
  SimDevice(SimDeviceSpec spec, const Clock& clock);
  ~SimDevice();
  SimDevice(const SimDevice&) = delete;
  SimDevice& operator=(const SimDevice&) = delete;

  const std::string& name() const { return name_; }
  const MacAddress& mac() const { return mac_; }
  link::DeviceEndpoints endpoints() const;

  // A silent device accepts connections and closes them straight away.
  void set_unplugged(bool unplugged) { unplugged_ = unplugged; }
  void crash() { crashed_ = true; }
  void recover() { crashed_ = false; }
  // Conduit requests are read and never answered.
  void set_muted(bool muted) { muted_ = muted; }
  void corrupt_next_transfer() { corrupt_next_ = true; }
  void set_ftp_drop_fraction(double fraction);
  void nack_next() { nack_next_ = true; }
  void set_reported_fault(bool fault) { fault_ = fault; }
  void set_reboot_delay(Duration d);
  // Rewrites one active config file and bumps the revision.
  void change_config(const std::string& name, Bytes bytes);

  bool silent() const;
  bool rebooting() const;

  Characteristics characteristics() const;
  HardwareProfile profile() const;
  std::map<std::string, Bytes> active_config() const;
  std::uint32_t config_revision() const;
  std::uint64_t active_config_digest() const;
  std::vector<DeviceMessage> messages() const;
  std::uint64_t bytes_stored(const std::string& path) const;
  std::uint64_t firmware_bytes_received() const;
  // Requests that change device state (characteristics, activation, STOR).
  std::size_t mutating_requests() const;

 private:
  void conduit_loop();
  void ftp_loop();
  void handle_conduit(net::TcpStream stream);
  link::Payload answer(const link::ConduitMessage& req);
  void handle_ftp(net::TcpStream control);
  void record(std::string kind, std::string detail, std::uint64_t bytes);
  void recompute_digest_locked();

  const Clock& clock_;
  std::string name_;
  MacAddress mac_;
  net::TcpListener conduit_listener_;
  net::TcpListener ftp_listener_;

  mutable std::mutex mu_;
  Characteristics characteristics_;
  HardwareProfile profile_;
  std::map<std::string, Bytes> files_;  // by remote path
  std::set<std::string> active_;        // logical config names
  std::uint32_t config_revision_ = 1;
  std::uint64_t active_digest_ = 0;
  Duration reboot_delay_;
  Duration reboot_until_{};
  std::vector<DeviceMessage> log_;
  std::map<std::string, std::uint64_t> stored_bytes_;
  std::uint64_t firmware_bytes_ = 0;
  double drop_fraction_ = 0.0;
  std::mt19937_64 rng_;

  std::atomic<bool> unplugged_{false};
  std::atomic<bool> crashed_{false};
  std::atomic<bool> muted_{false};
  std::atomic<bool> corrupt_next_{false};
  std::atomic<bool> nack_next_{false};
  std::atomic<bool> fault_{false};
  std::atomic<bool> stop_{false};
  std::thread conduit_thread_;
  std::thread ftp_thread_;
};

}  // namespace selfheal::sim
