#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include "selfheal/device.hpp"
#include "selfheal/digest.hpp"

namespace selfheal {

// Source of firmware images by (device type, version). Images are opaque;
// by convention their first line is the version string they install.
class FirmwareRepository {
 public:
  virtual ~FirmwareRepository() = default;
  virtual std::optional<Bytes> fetch(const std::string& device_type, const FirmwareVersion& version) const = 0;
};

// <dir>/<sanitized device type>/<version>.fw
class DirectoryFirmwareRepository final : public FirmwareRepository {
 public:
  explicit DirectoryFirmwareRepository(std::filesystem::path dir) : dir_(std::move(dir)) {}
  std::optional<Bytes> fetch(const std::string& device_type, const FirmwareVersion& version) const override;
  std::filesystem::path path_for(const std::string& device_type, const FirmwareVersion& version) const;

 private:
  std::filesystem::path dir_;
};

class InMemoryFirmwareRepository final : public FirmwareRepository {
 public:
  void add(const std::string& device_type, const FirmwareVersion& version, Bytes image);
  std::optional<Bytes> fetch(const std::string& device_type, const FirmwareVersion& version) const override;

 private:
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::string>, Bytes> images_;
};

// "Crown I-Tech HD" -> "Crown_I-Tech_HD"
std::string sanitize_device_type(const std::string& device_type);

// Synthetic image whose first line is the version.
Bytes make_firmware_image(const std::string& device_type, const FirmwareVersion& version, std::size_t payload_bytes = 4096);

}  // namespace selfheal
