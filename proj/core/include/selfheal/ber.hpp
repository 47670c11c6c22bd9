#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "selfheal/digest.hpp"
#include "selfheal/oid.hpp"

// Minimal BER codec for SNMPv2c messages (RFC 3416 PDUs).
namespace selfheal::snmp {

class BerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PduType : std::uint8_t {
  Get = 0xA0,
  GetNext = 0xA1,
  Response = 0xA2,
};

enum class ErrorStatus : std::int32_t {
  NoError = 0,
  TooBig = 1,
  NoSuchName = 2,
  GenErr = 5,
  NoAccess = 6,
  AuthorizationError = 16,
};

struct Null {
  bool operator==(const Null&) const = default;
};
struct EndOfMibView {
  bool operator==(const EndOfMibView&) const = default;
};
struct NoSuchObject {
  bool operator==(const NoSuchObject&) const = default;
};
struct NoSuchInstance {
  bool operator==(const NoSuchInstance&) const = default;
};
// Counter32, Gauge32, TimeTicks: application-tagged unsigned values.
struct Unsigned32 {
  std::uint8_t tag = 0x42;
  std::uint32_t value = 0;
  bool operator==(const Unsigned32&) const = default;
};

using Value = std::variant<Null, std::int64_t, Bytes, Oid, Unsigned32, EndOfMibView, NoSuchObject,
                           NoSuchInstance>;

struct VarBind {
  Oid oid;
  Value value;
  bool operator==(const VarBind&) const = default;
};

inline constexpr std::int32_t kVersion2c = 1;

struct Message {
  std::int32_t version = kVersion2c;
  std::string community;
  PduType type = PduType::GetNext;
  std::int32_t request_id = 0;
  std::int32_t error_status = 0;
  std::int32_t error_index = 0;
  std::vector<VarBind> varbinds;
  bool operator==(const Message&) const = default;
};

Bytes encode(const Message& msg);
// Throws BerError on any structural violation.
Message decode(std::span<const std::uint8_t> wire);

}  // namespace selfheal::snmp
