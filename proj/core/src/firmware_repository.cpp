#include "selfheal/firmware_repository.hpp"

#include <fstream>

namespace selfheal {

std::string sanitize_device_type(const std::string& device_type) {
  std::string out;
  for (char c : device_type) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                      c == '.';
    out += keep ? c : '_';
  }
  return out;
}

std::filesystem::path DirectoryFirmwareRepository::path_for(const std::string& device_type,
                                                            const FirmwareVersion& version) const {
  return dir_ / sanitize_device_type(device_type) / (version.str() + ".fw");
}

std::optional<Bytes> DirectoryFirmwareRepository::fetch(const std::string& device_type,
                                                        const FirmwareVersion& version) const {
  std::ifstream in(path_for(device_type, version), std::ios::binary);
  if (!in) return std::nullopt;
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void InMemoryFirmwareRepository::add(const std::string& device_type, const FirmwareVersion& version, Bytes image) {
  std::lock_guard lock(mu_);
  images_[{device_type, version.str()}] = std::move(image);
}

std::optional<Bytes> InMemoryFirmwareRepository::fetch(const std::string& device_type,
                                                       const FirmwareVersion& version) const {
  std::lock_guard lock(mu_);
  auto it = images_.find({device_type, version.str()});
  if (it == images_.end()) return std::nullopt;
  return it->second;
}

Bytes make_firmware_image(const std::string& device_type, const FirmwareVersion& version, std::size_t payload_bytes) {
  std::string header = version.str() + "\n" + "type=" + device_type + "\n";
  Bytes image(header.begin(), header.end());
  std::uint64_t state = digest(header);
  for (std::size_t i = 0; i < payload_bytes; ++i) {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    image.push_back(static_cast<std::uint8_t>(state >> 56));
  }
  return image;
}

}  // namespace selfheal
