#include "selfheal/ber.hpp"

namespace selfheal::snmp {

namespace {

constexpr std::uint8_t kInteger = 0x02;
constexpr std::uint8_t kOctetString = 0x04;
constexpr std::uint8_t kNull = 0x05;
constexpr std::uint8_t kObjectId = 0x06;
constexpr std::uint8_t kSequence = 0x30;
constexpr std::uint8_t kCounter32 = 0x41;
constexpr std::uint8_t kGauge32 = 0x42;
constexpr std::uint8_t kTimeTicks = 0x43;
constexpr std::uint8_t kNoSuchObject = 0x80;
constexpr std::uint8_t kNoSuchInstance = 0x81;
constexpr std::uint8_t kEndOfMibView = 0x82;

void put_length(Bytes& out, std::size_t len) {
  if (len < 0x80) {
    out.push_back(static_cast<std::uint8_t>(len));
    return;
  }
  std::uint8_t tmp[8];
  int n = 0;
  while (len > 0) {
    tmp[n++] = static_cast<std::uint8_t>(len & 0xff);
    len >>= 8;
  }
  out.push_back(static_cast<std::uint8_t>(0x80 | n));
  while (n > 0) out.push_back(tmp[--n]);
}

void put_tlv(Bytes& out, std::uint8_t tag, const Bytes& content) {
  out.push_back(tag);
  put_length(out, content.size());
  out.insert(out.end(), content.begin(), content.end());
}

Bytes encode_signed(std::int64_t v) {
  Bytes b;
  for (int shift = 56; shift >= 0; shift -= 8) b.push_back(static_cast<std::uint8_t>((v >> shift) & 0xff));
  // Strip redundant sign octets.
  std::size_t start = 0;
  while (start + 1 < b.size() &&
         ((b[start] == 0x00 && (b[start + 1] & 0x80) == 0) || (b[start] == 0xff && (b[start + 1] & 0x80) != 0))) {
    ++start;
  }
  return Bytes(b.begin() + static_cast<std::ptrdiff_t>(start), b.end());
}

Bytes encode_unsigned(std::uint32_t v) {
  Bytes b = encode_signed(static_cast<std::int64_t>(v));
  return b;
}

void put_base128(Bytes& out, std::uint32_t v) {
  std::uint8_t tmp[5];
  int n = 0;
  do {
    tmp[n++] = static_cast<std::uint8_t>(v & 0x7f);
    v >>= 7;
  } while (v > 0);
  while (n > 1) out.push_back(static_cast<std::uint8_t>(tmp[--n] | 0x80));
  out.push_back(tmp[0]);
}

Bytes encode_oid(const Oid& oid) {
  const auto& arcs = oid.arcs();
  if (arcs[0] > 2 || (arcs[0] < 2 && arcs[1] >= 40)) throw BerError("OID not encodable: " + oid.str());
  Bytes out;
  put_base128(out, arcs[0] * 40 + arcs[1]);
  for (std::size_t i = 2; i < arcs.size(); ++i) put_base128(out, arcs[i]);
  return out;
}

void put_value(Bytes& out, const Value& v) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Null>) put_tlv(out, kNull, {});
        else if constexpr (std::is_same_v<T, std::int64_t>) put_tlv(out, kInteger, encode_signed(x));
        else if constexpr (std::is_same_v<T, Bytes>) put_tlv(out, kOctetString, x);
        else if constexpr (std::is_same_v<T, Oid>) put_tlv(out, kObjectId, encode_oid(x));
        else if constexpr (std::is_same_v<T, Unsigned32>) put_tlv(out, x.tag, encode_unsigned(x.value));
        else if constexpr (std::is_same_v<T, EndOfMibView>) put_tlv(out, kEndOfMibView, {});
        else if constexpr (std::is_same_v<T, NoSuchObject>) put_tlv(out, kNoSuchObject, {});
        else if constexpr (std::is_same_v<T, NoSuchInstance>) put_tlv(out, kNoSuchInstance, {});
      },
      v);
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  bool done() const { return pos_ == data_.size(); }

  std::uint8_t peek_tag() const {
    if (pos_ >= data_.size()) throw BerError("truncated BER");
    return data_[pos_];
  }

  // Reads one TLV, returns (tag, content).
  std::pair<std::uint8_t, std::span<const std::uint8_t>> next() {
    const auto tag = byte();
    std::size_t len = byte();
    if (len & 0x80) {
      const std::size_t n = len & 0x7f;
      if (n == 0 || n > 4) throw BerError("unsupported BER length form");
      len = 0;
      for (std::size_t i = 0; i < n; ++i) len = (len << 8) | byte();
    }
    if (len > data_.size() - pos_) throw BerError("BER length exceeds buffer");
    auto content = data_.subspan(pos_, len);
    pos_ += len;
    return {tag, content};
  }

  std::span<const std::uint8_t> expect(std::uint8_t tag) {
    auto [t, content] = next();
    if (t != tag) throw BerError("unexpected BER tag");
    return content;
  }

 private:
  std::uint8_t byte() {
    if (pos_ >= data_.size()) throw BerError("truncated BER");
    return data_[pos_++];
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

std::int64_t decode_signed(std::span<const std::uint8_t> c) {
  if (c.empty() || c.size() > 8) throw BerError("bad INTEGER length");
  std::int64_t v = (c[0] & 0x80) ? -1 : 0;
  for (auto b : c) v = static_cast<std::int64_t>((static_cast<std::uint64_t>(v) << 8) | b);
  return v;
}

std::uint32_t decode_unsigned(std::span<const std::uint8_t> c) {
  if (c.empty() || c.size() > 5) throw BerError("bad unsigned length");
  std::uint64_t v = 0;
  for (auto b : c) v = (v << 8) | b;
  if (v > 0xffffffffULL) throw BerError("unsigned out of range");
  return static_cast<std::uint32_t>(v);
}

Oid decode_oid(std::span<const std::uint8_t> c) {
  if (c.empty()) throw BerError("empty OID");
  std::vector<std::uint32_t> subids;
  std::uint64_t cur = 0;
  bool pending = false;
  for (auto b : c) {
    cur = (cur << 7) | (b & 0x7f);
    if (cur > 0xffffffffULL) throw BerError("OID arc overflow");
    pending = true;
    if ((b & 0x80) == 0) {
      subids.push_back(static_cast<std::uint32_t>(cur));
      cur = 0;
      pending = false;
    }
  }
  if (pending) throw BerError("truncated OID arc");
  std::vector<std::uint32_t> arcs;
  const auto first = subids[0];
  if (first < 40) arcs = {0, first};
  else if (first < 80) arcs = {1, first - 40};
  else arcs = {2, first - 80};
  arcs.insert(arcs.end(), subids.begin() + 1, subids.end());
  return Oid(std::move(arcs));
}

Value decode_value(std::uint8_t tag, std::span<const std::uint8_t> c) {
  switch (tag) {
    case kNull: return Null{};
    case kInteger: return decode_signed(c);
    case kOctetString: return Bytes(c.begin(), c.end());
    case kObjectId: return decode_oid(c);
    case kCounter32:
    case kGauge32:
    case kTimeTicks: return Unsigned32{tag, decode_unsigned(c)};
    case kEndOfMibView: return EndOfMibView{};
    case kNoSuchObject: return NoSuchObject{};
    case kNoSuchInstance: return NoSuchInstance{};
    default: throw BerError("unsupported value tag");
  }
}

std::int32_t decode_int32(std::span<const std::uint8_t> c) {
  auto v = decode_signed(c);
  if (v < INT32_MIN || v > INT32_MAX) throw BerError("INTEGER out of int32 range");
  return static_cast<std::int32_t>(v);
}

}  // namespace

Bytes encode(const Message& msg) {
  Bytes vbl;
  for (const auto& vb : msg.varbinds) {
    Bytes one;
    put_tlv(one, kObjectId, encode_oid(vb.oid));
    put_value(one, vb.value);
    put_tlv(vbl, kSequence, one);
  }
  Bytes pdu;
  put_tlv(pdu, kInteger, encode_signed(msg.request_id));
  put_tlv(pdu, kInteger, encode_signed(msg.error_status));
  put_tlv(pdu, kInteger, encode_signed(msg.error_index));
  put_tlv(pdu, kSequence, vbl);

  Bytes body;
  put_tlv(body, kInteger, encode_signed(msg.version));
  put_tlv(body, kOctetString, Bytes(msg.community.begin(), msg.community.end()));
  put_tlv(body, static_cast<std::uint8_t>(msg.type), pdu);

  Bytes out;
  put_tlv(out, kSequence, body);
  return out;
}

Message decode(std::span<const std::uint8_t> wire) {
  Reader outer(wire);
  auto body = outer.expect(kSequence);
  if (!outer.done()) throw BerError("trailing bytes after message");

  Message msg;
  Reader r(body);
  msg.version = decode_int32(r.expect(kInteger));
  auto community = r.expect(kOctetString);
  msg.community.assign(community.begin(), community.end());

  auto [pdu_tag, pdu] = r.next();
  if (pdu_tag != 0xA0 && pdu_tag != 0xA1 && pdu_tag != 0xA2) throw BerError("unsupported PDU type");
  msg.type = static_cast<PduType>(pdu_tag);
  if (!r.done()) throw BerError("trailing bytes after PDU");

  Reader p(pdu);
  msg.request_id = decode_int32(p.expect(kInteger));
  msg.error_status = decode_int32(p.expect(kInteger));
  msg.error_index = decode_int32(p.expect(kInteger));
  Reader list(p.expect(kSequence));
  if (!p.done()) throw BerError("trailing bytes in PDU");

  while (!list.done()) {
    Reader vb(list.expect(kSequence));
    auto oid = decode_oid(vb.expect(kObjectId));
    auto [tag, content] = vb.next();
    if (!vb.done()) throw BerError("trailing bytes in varbind");
    msg.varbinds.push_back(VarBind{std::move(oid), decode_value(tag, content)});
  }
  return msg;
}

}  // namespace selfheal::snmp
