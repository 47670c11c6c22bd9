#include "selfheal/conduit.hpp"

#include <chrono>

namespace selfheal::link {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out.push_back(v); }
  void u16(std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
  }
  void u32(std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void u64(std::uint64_t v) {
    for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void str(const std::string& s) {
    if (s.size() > 0xffff) throw ProtocolError("string too long for frame");
    u16(static_cast<std::uint16_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
  }
  void strings(const std::vector<std::string>& v) {
    if (v.size() > 0xffff) throw ProtocolError("list too long for frame");
    u16(static_cast<std::uint16_t>(v.size()));
    for (const auto& s : v) str(s);
  }
  void characteristics(const Characteristics& c) {
    u32(c.device_address);
    u32(c.ip_config.ip.value());
    u8(c.ip_config.dhcp_enabled ? 1 : 0);
  }

  Bytes out;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>((data_[pos_] << 8) | data_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | data_[pos_++];
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | data_[pos_++];
    return v;
  }
  std::string str() {
    auto n = u16();
    need(n);
    std::string s(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  std::vector<std::string> strings() {
    auto n = u16();
    std::vector<std::string> v;
    v.reserve(n);
    for (std::uint16_t i = 0; i < n; ++i) v.push_back(str());
    return v;
  }
  bool flag() {
    auto v = u8();
    if (v > 1) throw ProtocolError("boolean field out of range");
    return v == 1;
  }
  Characteristics characteristics() {
    Characteristics c;
    c.device_address = u32();
    c.ip_config.ip = Ipv4(u32());
    c.ip_config.dhcp_enabled = flag();
    return c;
  }
  void finish() const {
    if (pos_ != data_.size()) throw ProtocolError("trailing bytes in frame");
  }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw ProtocolError("truncated frame");
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

void encode_payload(Writer& w, const Payload& payload) {
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SetCharacteristics>) {
          w.characteristics(p.characteristics);
        } else if constexpr (std::is_same_v<T, Ack>) {
          w.u8(p.status);
          w.u64(p.value);
        } else if constexpr (std::is_same_v<T, Nack>) {
          w.str(p.reason);
        } else if constexpr (std::is_same_v<T, InterrogateReply>) {
          w.characteristics(p.characteristics);
          w.str(p.profile.device_type);
          if (p.profile.hardware_params.size() > 0xffff) throw ProtocolError("too many hardware params");
          w.u16(static_cast<std::uint16_t>(p.profile.hardware_params.size()));
          for (const auto& [k, v] : p.profile.hardware_params) {
            w.str(k);
            w.str(v);
          }
          w.str(p.profile.firmware_version.str());
          w.strings(p.config_files);
          w.u32(p.config_revision);
          w.u64(p.active_config_digest);
        } else if constexpr (std::is_same_v<T, ActivateConfig>) {
          w.u8(static_cast<std::uint8_t>(p.target));
          w.strings(p.paths);
        } else if constexpr (std::is_same_v<T, Rebooting>) {
          w.u32(p.expected_ms);
        }
        // Interrogate and Heartbeat have empty payloads.
      },
      payload);
}

Payload decode_payload(MessageKind kind, Reader& r) {
  switch (kind) {
    case MessageKind::SetCharacteristics: return SetCharacteristics{r.characteristics()};
    case MessageKind::Ack: {
      Ack a;
      a.status = r.u8();
      a.value = r.u64();
      return a;
    }
    case MessageKind::Nack: return Nack{r.str()};
    case MessageKind::Interrogate: return Interrogate{};
    case MessageKind::InterrogateReply: {
      InterrogateReply p;
      p.characteristics = r.characteristics();
      p.profile.device_type = r.str();
      auto n = r.u16();
      for (std::uint16_t i = 0; i < n; ++i) {
        auto k = r.str();
        p.profile.hardware_params[k] = r.str();
      }
      try {
        p.profile.firmware_version = FirmwareVersion::parse(r.str());
      } catch (const std::invalid_argument& e) {
        throw ProtocolError(e.what());
      }
      p.config_files = r.strings();
      p.config_revision = r.u32();
      p.active_config_digest = r.u64();
      return p;
    }
    case MessageKind::Heartbeat: return Heartbeat{};
    case MessageKind::ActivateConfig: {
      ActivateConfig a;
      auto target = r.u8();
      if (target > 1) throw ProtocolError("unknown activation target");
      a.target = static_cast<ActivationTarget>(target);
      a.paths = r.strings();
      return a;
    }
    case MessageKind::Rebooting: return Rebooting{r.u32()};
  }
  throw ProtocolError("unknown message kind");
}

}  // namespace

const char* to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::SetCharacteristics: return "SetCharacteristics";
    case MessageKind::Ack: return "Ack";
    case MessageKind::Nack: return "Nack";
    case MessageKind::Interrogate: return "Interrogate";
    case MessageKind::InterrogateReply: return "InterrogateReply";
    case MessageKind::Heartbeat: return "Heartbeat";
    case MessageKind::ActivateConfig: return "ActivateConfig";
    case MessageKind::Rebooting: return "Rebooting";
  }
  return "?";
}

const char* to_string(ConduitError::Kind kind) {
  switch (kind) {
    case ConduitError::Kind::Timeout: return "Timeout";
    case ConduitError::Kind::Unreachable: return "Unreachable";
    case ConduitError::Kind::Nack: return "Nack";
    case ConduitError::Kind::Protocol: return "Protocol";
  }
  return "?";
}

MessageKind ConduitMessage::kind() const {
  // Variant alternatives are declared in MessageKind order.
  return static_cast<MessageKind>(payload.index() + 1);
}

bool is_request(MessageKind kind) {
  return kind == MessageKind::SetCharacteristics || kind == MessageKind::Interrogate ||
         kind == MessageKind::Heartbeat || kind == MessageKind::ActivateConfig;
}

MessageKind expected_reply(MessageKind request, const Payload& payload) {
  switch (request) {
    case MessageKind::SetCharacteristics: return MessageKind::Ack;
    case MessageKind::Interrogate: return MessageKind::InterrogateReply;
    case MessageKind::Heartbeat: return MessageKind::Ack;
    case MessageKind::ActivateConfig: {
      const auto* a = std::get_if<ActivateConfig>(&payload);
      return a != nullptr && a->target == ActivationTarget::Firmware ? MessageKind::Rebooting : MessageKind::Ack;
    }
    default: throw ProtocolError(std::string(to_string(request)) + " is not a request kind");
  }
}

Bytes encode_frame(const ConduitMessage& msg) {
  Writer body;
  body.u8(static_cast<std::uint8_t>(msg.kind()));
  body.u32(msg.correlation_id);
  encode_payload(body, msg.payload);
  if (body.out.size() > kMaxFrameBytes) throw ProtocolError("frame too large");

  Writer frame;
  frame.u32(static_cast<std::uint32_t>(body.out.size()));
  frame.out.insert(frame.out.end(), body.out.begin(), body.out.end());
  return frame.out;
}

ConduitMessage decode_frame_body(std::span<const std::uint8_t> body) {
  Reader r(body);
  auto kind_byte = r.u8();
  if (kind_byte < 1 || kind_byte > 8) throw ProtocolError("unknown message kind " + std::to_string(kind_byte));
  ConduitMessage msg;
  msg.correlation_id = r.u32();
  msg.payload = decode_payload(static_cast<MessageKind>(kind_byte), r);
  r.finish();
  return msg;
}

ConduitMessage read_frame(net::TcpStream& stream, net::Timeout timeout) {
  std::uint8_t len_bytes[4];
  stream.recv_exact(len_bytes, timeout);
  const std::uint32_t len = (static_cast<std::uint32_t>(len_bytes[0]) << 24) |
                            (static_cast<std::uint32_t>(len_bytes[1]) << 16) |
                            (static_cast<std::uint32_t>(len_bytes[2]) << 8) | len_bytes[3];
  if (len < 5 || len > kMaxFrameBytes) throw ProtocolError("bad frame length " + std::to_string(len));
  Bytes body(len);
  stream.recv_exact(body, timeout);
  return decode_frame_body(body);
}

void write_frame(net::TcpStream& stream, const ConduitMessage& msg, net::Timeout timeout) {
  stream.send_all(encode_frame(msg), timeout);
}

std::uint64_t config_set_digest(const std::vector<std::pair<std::string, Bytes>>& files_sorted_by_name) {
  Bytes buf;
  for (const auto& [name, bytes] : files_sorted_by_name) {
    for (int s = 56; s >= 0; s -= 8) buf.push_back(static_cast<std::uint8_t>(name.size() >> s));
    buf.insert(buf.end(), name.begin(), name.end());
    for (int s = 56; s >= 0; s -= 8) buf.push_back(static_cast<std::uint8_t>(bytes.size() >> s));
    buf.insert(buf.end(), bytes.begin(), bytes.end());
  }
  return digest(buf);
}

ConduitMessage ConduitClient::send_request(const net::Endpoint& endpoint, Payload request, net::Timeout timeout) {
  ConduitMessage msg{next_id_.fetch_add(1), std::move(request)};
  if (!is_request(msg.kind())) throw ProtocolError(std::string(to_string(msg.kind())) + " is not a request");
  const auto want = expected_reply(msg.kind(), msg.payload);
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  auto left = [&] {
    return std::chrono::duration_cast<net::Timeout>(deadline - std::chrono::steady_clock::now());
  };

  net::TcpStream stream;
  try {
    stream = net::TcpStream::connect(endpoint, timeout);
    write_frame(stream, msg, left());
  } catch (const net::NetError& e) {
    if (e.kind() == net::NetError::Kind::Timeout) throw ConduitError(ConduitError::Kind::Timeout, e.what());
    throw ConduitError(ConduitError::Kind::Unreachable, e.what());
  }

  for (;;) {
    ConduitMessage reply;
    try {
      if (left().count() <= 0) throw net::NetError(net::NetError::Kind::Timeout, "reply timed out");
      reply = read_frame(stream, left());
    } catch (const net::NetError& e) {
      if (e.kind() == net::NetError::Kind::Timeout) {
        throw ConduitError(ConduitError::Kind::Timeout, "no reply from " + endpoint.str());
      }
      throw ConduitError(ConduitError::Kind::Unreachable, endpoint.str() + ": " + e.what());
    } catch (const ProtocolError& e) {
      throw ConduitError(ConduitError::Kind::Protocol, e.what());
    }
    if (reply.correlation_id != msg.correlation_id) {
      mismatched_.fetch_add(1);
      continue;
    }
    if (const auto* nack = std::get_if<Nack>(&reply.payload)) {
      throw ConduitError(ConduitError::Kind::Nack, nack->reason);
    }
    if (reply.kind() != want) {
      throw ConduitError(ConduitError::Kind::Protocol, std::string("expected ") + to_string(want) + ", got " +
                                                           to_string(reply.kind()));
    }
    return reply;
  }
}

}  // namespace selfheal::link
