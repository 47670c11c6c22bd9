#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

#include "selfheal/clock.hpp"
#include "selfheal/net.hpp"
#include "selfheal/snmp_tables.hpp"

namespace selfheal {

struct OrchestratorConfig {
  net::Endpoint switch_endpoint;
  std::string community;
  snmp::TableRoots table_roots = snmp::TableRoots::defaults();
  Duration poll_period = std::chrono::seconds(1);
  int miss_threshold = 3;
  int stage_retries = 3;
  int reboot_bound_multiplier = 10;
  std::filesystem::path snapshot_dir = "snapshots";
  std::size_t history_depth = 5;
  bool allow_cross_port = false;
  Duration conduit_timeout = std::chrono::seconds(2);
  Duration ftp_timeout = std::chrono::seconds(5);

  Duration stage_backoff = std::chrono::seconds(1);
  Duration snmp_timeout = std::chrono::seconds(1);
  int snmp_retries = 2;
  bool heartbeat = true;
  std::optional<std::filesystem::path> event_log;
  std::optional<std::uint16_t> status_port;
  std::optional<std::filesystem::path> device_map;
  std::optional<std::filesystem::path> firmware_dir;
  std::optional<std::set<std::string>> required_hardware_params;

  Duration reboot_bound() const { return poll_period * reboot_bound_multiplier; }
};

class ConfigError : public std::runtime_error {
 public:
  enum class Kind { Parse, Validation };
  ConfigError(Kind kind, std::string key, const std::string& what)
      : std::runtime_error(what), kind_(kind), key_(std::move(key)) {}
  Kind kind() const { return kind_; }
  // Offending key, empty for syntax errors.
  const std::string& key() const { return key_; }

 private:
  Kind kind_;
  std::string key_;
};

// Flat "key = value" lines, '#' comments. Unknown or repeated keys are
// rejected. Relative paths are resolved against `base_dir`.
OrchestratorConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
OrchestratorConfig load_config(const std::filesystem::path& path);

// Applies the value rules every loaded config must pass.
void validate_config(const OrchestratorConfig& config);

// Canonical text that parses back to the same config.
std::string render_config(const OrchestratorConfig& config);

}  // namespace selfheal
