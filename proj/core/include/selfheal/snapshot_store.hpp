#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "selfheal/device.hpp"
#include "selfheal/digest.hpp"

namespace selfheal {

struct ConfigFile {
  std::string logical_name;
  Bytes bytes;
  std::uint64_t checksum = 0;
  bool operator==(const ConfigFile&) const = default;
};

// A device's last working point.
struct ConfigSnapshot {
  MacAddress mac;
  Characteristics characteristics;
  HardwareProfile profile;
  std::vector<ConfigFile> config_files;
  std::uint64_t taken_at_generation = 0;

  // Digest the device reports once this configuration set is active.
  std::uint64_t config_digest() const;
  bool operator==(const ConfigSnapshot&) const = default;
};

class SnapshotError : public std::runtime_error {
 public:
  enum class Kind { NotFound, CorruptSnapshot, StorageFailure, InvalidInput };
  SnapshotError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

const char* to_string(SnapshotError::Kind kind);

// Thrown by a write hook to simulate the process dying at that point.
struct SimulatedInterruption : std::runtime_error {
  SimulatedInterruption() : std::runtime_error("simulated interruption") {}
};

struct StoreOptions {
  std::size_t history_depth = 5;
};

// Filesystem store, one directory per MAC:
//
//   <root>/<aa-bb-cc-dd-ee-ff>/<generation:020>-<seq:06>/manifest
//                                                       /files/<index>
//
// A snapshot is written into a dot-prefixed temp directory and renamed into
// place, so readers see it complete or not at all. The manifest format is
// documented in docs/snapshot-format.md.
class SnapshotStore {
 public:
  // Called before each write step with a step counter and a label. Tests
  // throw SimulatedInterruption from it to enumerate crash points.
  using WriteHook = std::function<void(int step, const std::string& label)>;

  explicit SnapshotStore(std::filesystem::path root, StoreOptions options = {}, WriteHook hook = {});

  // Captures an Online device's last working point.
  ConfigSnapshot save_snapshot(const DeviceRecord& device,
                               const std::vector<std::pair<std::string, Bytes>>& config_files,
                               std::uint64_t generation);
  ConfigSnapshot save(ConfigSnapshot snapshot);

  // Newest snapshot whose manifest and file checksums verify. Corrupt newer
  // snapshots are skipped and described in `diagnostics`.
  ConfigSnapshot load_latest_snapshot(const MacAddress& mac, std::vector<std::string>* diagnostics = nullptr) const;

  bool has_snapshot(const MacAddress& mac) const;
  // Snapshot directories for `mac`, oldest first.
  std::vector<std::filesystem::path> snapshot_dirs(const MacAddress& mac) const;

  const std::filesystem::path& root() const { return root_; }
  void set_write_hook(WriteHook hook) { hook_ = std::move(hook); }

 private:
  std::filesystem::path mac_dir(const MacAddress& mac) const;
  void step(int& counter, const std::string& label) const;

  std::filesystem::path root_;
  StoreOptions options_;
  WriteHook hook_;
};

// Manifest (de)serialization, exposed for the format tests.
std::string render_manifest(const ConfigSnapshot& snapshot);
// Parses a manifest; file bytes are left empty. Throws SnapshotError(CorruptSnapshot).
ConfigSnapshot parse_manifest(const std::string& text);

}  // namespace selfheal
