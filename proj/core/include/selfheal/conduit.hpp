#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "selfheal/device.hpp"
#include "selfheal/net.hpp"

// Characteristic/heartbeat messaging conduit.
//
// Frame layout (all integers big-endian):
//
//   u32 length        bytes that follow this field
//   u8  kind          MessageKind
//   u32 correlation   echoed unchanged in the reply
//   ... payload       fixed field order per kind, see docs/conduit-protocol.md
//
// Strings are u16 length + bytes; lists are u16 count + items.
namespace selfheal::link {

enum class MessageKind : std::uint8_t {
  SetCharacteristics = 1,
  Ack = 2,
  Nack = 3,
  Interrogate = 4,
  InterrogateReply = 5,
  Heartbeat = 6,
  ActivateConfig = 7,
  Rebooting = 8,
};

const char* to_string(MessageKind kind);

struct SetCharacteristics {
  Characteristics characteristics;
  bool operator==(const SetCharacteristics&) const = default;
};

// Heartbeat replies use status 0 = healthy, 1 = faulted and carry the
// configuration revision in `value`. Configuration activation carries the
// resulting active-config digest in `value`.
struct Ack {
  std::uint8_t status = 0;
  std::uint64_t value = 0;
  bool operator==(const Ack&) const = default;
};

struct Nack {
  std::string reason;
  bool operator==(const Nack&) const = default;
};

struct Interrogate {
  bool operator==(const Interrogate&) const = default;
};

struct InterrogateReply {
  Characteristics characteristics;
  HardwareProfile profile;
  std::vector<std::string> config_files;
  std::uint32_t config_revision = 0;
  std::uint64_t active_config_digest = 0;
  bool operator==(const InterrogateReply&) const = default;
};

struct Heartbeat {
  bool operator==(const Heartbeat&) const = default;
};

enum class ActivationTarget : std::uint8_t { Configuration = 0, Firmware = 1 };

struct ActivateConfig {
  ActivationTarget target = ActivationTarget::Configuration;
  std::vector<std::string> paths;
  bool operator==(const ActivateConfig&) const = default;
};

// Reply to a firmware activation: the device is going down to apply it.
struct Rebooting {
  std::uint32_t expected_ms = 0;
  bool operator==(const Rebooting&) const = default;
};

using Payload =
    std::variant<SetCharacteristics, Ack, Nack, Interrogate, InterrogateReply, Heartbeat, ActivateConfig, Rebooting>;

struct ConduitMessage {
  std::uint32_t correlation_id = 0;
  Payload payload;

  MessageKind kind() const;
  bool operator==(const ConduitMessage&) const = default;
};

bool is_request(MessageKind kind);
// The reply kind a well-behaved device answers `request` with (Nack aside).
MessageKind expected_reply(MessageKind request, const Payload& payload);

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kMaxFrameBytes = 16 * 1024 * 1024;

Bytes encode_frame(const ConduitMessage& msg);
// `body` is everything after the length prefix. Throws ProtocolError.
ConduitMessage decode_frame_body(std::span<const std::uint8_t> body);

ConduitMessage read_frame(net::TcpStream& stream, net::Timeout timeout);
void write_frame(net::TcpStream& stream, const ConduitMessage& msg, net::Timeout timeout);

// Merged digest of a configuration set, the value devices report as their
// active-config digest. Order-sensitive over (name, bytes) pairs sorted by name.
std::uint64_t config_set_digest(const std::vector<std::pair<std::string, Bytes>>& files_sorted_by_name);

class ConduitError : public std::runtime_error {
 public:
  enum class Kind {
    Timeout,      // no reply in time
    Unreachable,  // connection refused, or closed before a reply
    Nack,         // device refused
    Protocol,     // undecodable or wrong reply kind
  };
  ConduitError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

const char* to_string(ConduitError::Kind kind);

class ConduitClient {
 public:
  // Assigns a fresh correlation id, sends, and waits for the matching reply.
  // Replies with another correlation id are discarded and counted.
  ConduitMessage send_request(const net::Endpoint& endpoint, Payload request, net::Timeout timeout);

  std::uint64_t mismatched_replies() const { return mismatched_.load(); }

 private:
  std::atomic<std::uint32_t> next_id_{1};
  std::atomic<std::uint64_t> mismatched_{0};
};

}  // namespace selfheal::link
