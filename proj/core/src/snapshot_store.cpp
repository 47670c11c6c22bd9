#include "selfheal/snapshot_store.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "selfheal/conduit.hpp"

namespace fs = std::filesystem;

namespace selfheal {

namespace {

constexpr const char* kFormat = "selfheal-snapshot/1";

std::string escape(std::string_view in) {
  std::string out;
  for (unsigned char c : in) {
    if (c == '%' || c == '=' || c == ':' || c < 0x20 || c == 0x7f) {
      char buf[4];
      std::snprintf(buf, sizeof buf, "%%%02X", c);
      out += buf;
    } else {
      out += static_cast<char>(c);
    }
  }
  return out;
}

std::string unescape(std::string_view in) {
  std::string out;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == '%') {
      if (i + 2 >= in.size()) throw SnapshotError(SnapshotError::Kind::CorruptSnapshot, "bad escape in manifest");
      auto hex = std::string(in.substr(i + 1, 2));
      char* end = nullptr;
      long v = std::strtol(hex.c_str(), &end, 16);
      if (end != hex.c_str() + 2) throw SnapshotError(SnapshotError::Kind::CorruptSnapshot, "bad escape in manifest");
      out += static_cast<char>(v);
      i += 2;
    } else {
      out += in[i];
    }
  }
  return out;
}

[[noreturn]] void corrupt(const std::string& what) { throw SnapshotError(SnapshotError::Kind::CorruptSnapshot, what); }

std::uint64_t to_u64(const std::string& s) {
  if (s.empty() || s.size() > 20 || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    corrupt("bad integer in manifest: " + s);
  }
  return std::stoull(s);
}

void write_file_synced(const fs::path& path, std::span<const std::uint8_t> bytes) {
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw SnapshotError(SnapshotError::Kind::StorageFailure, "cannot create " + path.string());
  std::size_t off = 0;
  while (off < bytes.size()) {
    auto n = ::write(fd, bytes.data() + off, bytes.size() - off);
    if (n < 0) {
      ::close(fd);
      throw SnapshotError(SnapshotError::Kind::StorageFailure, "write failed: " + path.string());
    }
    off += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
}

void sync_dir(const fs::path& dir) {
  int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (fd >= 0) {
    ::fsync(fd);
    ::close(fd);
  }
}

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) corrupt("missing file " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

bool is_snapshot_dir_name(const std::string& name) {
  return name.size() == 27 && name[20] == '-' &&
         std::all_of(name.begin(), name.begin() + 20, [](char c) { return c >= '0' && c <= '9'; }) &&
         std::all_of(name.begin() + 21, name.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

const char* to_string(SnapshotError::Kind kind) {
  switch (kind) {
    case SnapshotError::Kind::NotFound: return "NotFound";
    case SnapshotError::Kind::CorruptSnapshot: return "CorruptSnapshot";
    case SnapshotError::Kind::StorageFailure: return "StorageFailure";
    case SnapshotError::Kind::InvalidInput: return "InvalidInput";
  }
  return "?";
}

std::uint64_t ConfigSnapshot::config_digest() const {
  std::vector<std::pair<std::string, Bytes>> files;
  for (const auto& f : config_files) files.emplace_back(f.logical_name, f.bytes);
  std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return link::config_set_digest(files);
}

std::string render_manifest(const ConfigSnapshot& s) {
  std::string body;
  body += std::string("format=") + kFormat + "\n";
  body += std::string("digest=") + std::string(kDigestName) + "\n";
  body += "mac=" + s.mac.str() + "\n";
  body += "device_address=" + std::to_string(s.characteristics.device_address) + "\n";
  body += "ip=" + s.characteristics.ip_config.ip.str() + "\n";
  body += std::string("dhcp=") + (s.characteristics.ip_config.dhcp_enabled ? "1" : "0") + "\n";
  body += "device_type=" + escape(s.profile.device_type) + "\n";
  body += "firmware_version=" + s.profile.firmware_version.str() + "\n";
  body += "taken_at_generation=" + std::to_string(s.taken_at_generation) + "\n";
  for (const auto& [k, v] : s.profile.hardware_params) body += "hw_param=" + escape(k) + ":" + escape(v) + "\n";
  for (std::size_t i = 0; i < s.config_files.size(); ++i) {
    const auto& f = s.config_files[i];
    body += "config_file=" + std::to_string(i) + ":" + digest_hex(f.checksum) + ":" + std::to_string(f.bytes.size()) +
            ":" + escape(f.logical_name) + "\n";
  }
  body += "end=" + digest_hex(digest(body)) + "\n";
  return body;
}

ConfigSnapshot parse_manifest(const std::string& text) {
  auto end_pos = text.rfind("end=");
  if (end_pos == std::string::npos || (end_pos != 0 && text[end_pos - 1] != '\n')) corrupt("manifest has no end line");
  const std::string body = text.substr(0, end_pos);
  std::string end_value = text.substr(end_pos + 4);
  if (end_value.empty() || end_value.back() != '\n') corrupt("manifest end line truncated");
  end_value.pop_back();
  std::uint64_t expected = 0;
  try {
    expected = parse_digest_hex(end_value);
  } catch (const std::invalid_argument&) {
    corrupt("bad manifest checksum");
  }
  if (expected != digest(body)) corrupt("manifest checksum mismatch");

  ConfigSnapshot s;
  std::set<std::string> seen;
  std::set<std::string> names;
  std::istringstream in(body);
  std::string line;
  try {
    while (std::getline(in, line)) {
      auto eq = line.find('=');
      if (eq == std::string::npos) corrupt("manifest line without '='");
      const auto key = line.substr(0, eq);
      const auto value = line.substr(eq + 1);
      const bool repeatable = key == "hw_param" || key == "config_file";
      if (!repeatable && !seen.insert(key).second) corrupt("duplicate manifest key " + key);
      if (key == "format") {
        if (value != kFormat) corrupt("unsupported manifest format " + value);
      } else if (key == "digest") {
        if (value != kDigestName) corrupt("unsupported digest " + value);
      } else if (key == "mac") {
        s.mac = MacAddress::parse(value);
      } else if (key == "device_address") {
        s.characteristics.device_address = static_cast<std::uint32_t>(to_u64(value));
      } else if (key == "ip") {
        s.characteristics.ip_config.ip = Ipv4::parse(value);
      } else if (key == "dhcp") {
        if (value != "0" && value != "1") corrupt("bad dhcp flag");
        s.characteristics.ip_config.dhcp_enabled = value == "1";
      } else if (key == "device_type") {
        s.profile.device_type = unescape(value);
      } else if (key == "firmware_version") {
        s.profile.firmware_version = FirmwareVersion::parse(value);
      } else if (key == "taken_at_generation") {
        s.taken_at_generation = to_u64(value);
      } else if (key == "hw_param") {
        auto colon = value.find(':');
        if (colon == std::string::npos) corrupt("bad hw_param");
        s.profile.hardware_params[unescape(value.substr(0, colon))] = unescape(value.substr(colon + 1));
      } else if (key == "config_file") {
        std::vector<std::string> parts;
        std::size_t start = 0;
        for (int i = 0; i < 3; ++i) {
          auto colon = value.find(':', start);
          if (colon == std::string::npos) corrupt("bad config_file entry");
          parts.push_back(value.substr(start, colon - start));
          start = colon + 1;
        }
        parts.push_back(value.substr(start));
        if (to_u64(parts[0]) != s.config_files.size()) corrupt("config files out of order");
        ConfigFile f;
        f.checksum = parse_digest_hex(parts[1]);
        f.bytes.resize(static_cast<std::size_t>(to_u64(parts[2])));
        f.logical_name = unescape(parts[3]);
        if (!names.insert(f.logical_name).second) corrupt("duplicate config file name");
        s.config_files.push_back(std::move(f));
      } else {
        corrupt("unknown manifest key " + key);
      }
    }
  } catch (const std::invalid_argument& e) {
    corrupt(std::string("bad manifest value: ") + e.what());
  }
  for (const char* required : {"format", "digest", "mac", "device_address", "ip", "dhcp", "device_type",
                               "firmware_version", "taken_at_generation"}) {
    if (!seen.contains(required)) corrupt(std::string("manifest missing ") + required);
  }
  return s;
}

SnapshotStore::SnapshotStore(fs::path root, StoreOptions options, WriteHook hook)
    : root_(std::move(root)), options_(options), hook_(std::move(hook)) {
  if (options_.history_depth == 0) throw std::invalid_argument("history depth must be at least 1");
}

fs::path SnapshotStore::mac_dir(const MacAddress& mac) const {
  auto name = mac.str();
  std::replace(name.begin(), name.end(), ':', '-');
  return root_ / name;
}

void SnapshotStore::step(int& counter, const std::string& label) const {
  if (hook_) hook_(counter, label);
  ++counter;
}

ConfigSnapshot SnapshotStore::save_snapshot(const DeviceRecord& device,
                                            const std::vector<std::pair<std::string, Bytes>>& config_files,
                                            std::uint64_t generation) {
  if (device.status != DeviceStatus::Online) {
    throw SnapshotError(SnapshotError::Kind::InvalidInput, "snapshots are taken of Online devices only");
  }
  if (!device.characteristics || !device.profile) {
    throw SnapshotError(SnapshotError::Kind::InvalidInput, "device " + device.mac.str() + " not interrogated yet");
  }
  ConfigSnapshot s;
  s.mac = device.mac;
  s.characteristics = *device.characteristics;
  s.profile = *device.profile;
  s.taken_at_generation = generation;
  for (const auto& [name, bytes] : config_files) s.config_files.push_back(ConfigFile{name, bytes, digest(bytes)});
  return save(std::move(s));
}

ConfigSnapshot SnapshotStore::save(ConfigSnapshot s) {
  std::set<std::string> names;
  for (auto& f : s.config_files) {
    if (!names.insert(f.logical_name).second) {
      throw SnapshotError(SnapshotError::Kind::InvalidInput, "duplicate config file name " + f.logical_name);
    }
    f.checksum = digest(f.bytes);
  }

  const auto dir = mac_dir(s.mac);
  int counter = 0;
  fs::path tmp;
  try {
    fs::create_directories(dir);
    // Leftovers from interrupted saves.
    std::uint64_t next_seq = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
      const auto name = entry.path().filename().string();
      if (name.starts_with(".tmp-")) {
        fs::remove_all(entry.path());
      } else if (is_snapshot_dir_name(name)) {
        next_seq = std::max<std::uint64_t>(next_seq, std::stoull(name.substr(21)) + 1);
      }
    }

    char final_name[32];
    std::snprintf(final_name, sizeof final_name, "%020llu-%06llu", static_cast<unsigned long long>(s.taken_at_generation),
                  static_cast<unsigned long long>(next_seq % 1000000));
    tmp = dir / (std::string(".tmp-") + final_name + "-" + std::to_string(std::random_device{}()));

    step(counter, "mkdir");
    fs::create_directories(tmp / "files");

    for (std::size_t i = 0; i < s.config_files.size(); ++i) {
      const auto& bytes = s.config_files[i].bytes;
      const auto path = tmp / "files" / std::to_string(i);
      step(counter, "file " + std::to_string(i) + " begin");
      const auto half = bytes.size() / 2;
      write_file_synced(path, std::span(bytes).first(half));
      step(counter, "file " + std::to_string(i) + " half");
      write_file_synced(path, bytes);
    }

    step(counter, "manifest");
    write_file_synced(tmp / "manifest", to_bytes(render_manifest(s)));
    step(counter, "sync");
    sync_dir(tmp);
    step(counter, "rename");
    fs::rename(tmp, dir / final_name);
    sync_dir(dir);
    tmp.clear();

    step(counter, "prune");
    auto dirs = snapshot_dirs(s.mac);
    while (dirs.size() > options_.history_depth) {
      fs::remove_all(dirs.front());
      dirs.erase(dirs.begin());
    }
  } catch (const SimulatedInterruption&) {
    // A crashed process cleans nothing up; leave the temp directory behind.
    throw;
  } catch (const fs::filesystem_error& e) {
    if (!tmp.empty()) fs::remove_all(tmp);
    throw SnapshotError(SnapshotError::Kind::StorageFailure, e.what());
  } catch (const SnapshotError&) {
    if (!tmp.empty()) {
      std::error_code ec;
      fs::remove_all(tmp, ec);
    }
    throw;
  }
  return s;
}

std::vector<fs::path> SnapshotStore::snapshot_dirs(const MacAddress& mac) const {
  std::vector<fs::path> out;
  const auto dir = mac_dir(mac);
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (is_snapshot_dir_name(entry.path().filename().string())) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool SnapshotStore::has_snapshot(const MacAddress& mac) const { return !snapshot_dirs(mac).empty(); }

ConfigSnapshot SnapshotStore::load_latest_snapshot(const MacAddress& mac, std::vector<std::string>* diagnostics) const {
  auto dirs = snapshot_dirs(mac);
  if (dirs.empty()) throw SnapshotError(SnapshotError::Kind::NotFound, "no snapshot for " + mac.str());
  for (auto it = dirs.rbegin(); it != dirs.rend(); ++it) {
    try {
      std::ifstream in(*it / "manifest", std::ios::binary);
      if (!in) corrupt("missing manifest");
      std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      auto s = parse_manifest(text);
      if (s.mac != mac) corrupt("manifest belongs to " + s.mac.str());
      for (std::size_t i = 0; i < s.config_files.size(); ++i) {
        auto& f = s.config_files[i];
        auto bytes = read_file(*it / "files" / std::to_string(i));
        if (bytes.size() != f.bytes.size()) corrupt("size mismatch for " + f.logical_name);
        if (digest(bytes) != f.checksum) corrupt("checksum mismatch for " + f.logical_name);
        f.bytes = std::move(bytes);
      }
      return s;
    } catch (const SnapshotError& e) {
      if (diagnostics != nullptr) diagnostics->push_back(it->filename().string() + ": " + e.what());
    }
  }
  throw SnapshotError(SnapshotError::Kind::CorruptSnapshot, "every snapshot for " + mac.str() + " is corrupt");
}

}  // namespace selfheal
