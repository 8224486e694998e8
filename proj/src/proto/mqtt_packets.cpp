#include "fedplat/proto/mqtt_packets.hpp"

namespace fedplat::proto::mqtt {

namespace {

void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

void put_string(Bytes& out, const std::string& s) {
  if (s.size() > 0xffff) throw PacketError("string field longer than 65535 bytes");
  put_u16(out, static_cast<std::uint16_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

Bytes frame(PacketType type, std::uint8_t flags, const Bytes& body) {
  Bytes out{static_cast<std::uint8_t>(static_cast<std::uint8_t>(type) << 4 | (flags & 0x0f))};
  const Bytes len = encode_remaining_length(body.size());
  out.insert(out.end(), len.begin(), len.end());
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

std::uint16_t get_u16(const Bytes& b, std::size_t at) {
  if (at + 2 > b.size()) throw PacketError("packet truncated");
  return static_cast<std::uint16_t>(b[at] << 8 | b[at + 1]);
}

}  // namespace

Bytes encode_remaining_length(std::size_t n) {
  if (n > 268435455) throw PacketError("packet too large for MQTT");
  Bytes out;
  do {
    std::uint8_t byte = n % 128;
    n /= 128;
    if (n > 0) byte |= 0x80;
    out.push_back(byte);
  } while (n > 0);
  return out;
}

Bytes encode_connect(const ConnectOptions& o) {
  Bytes body;
  put_string(body, "MQTT");
  body.push_back(4);  // protocol level 3.1.1
  std::uint8_t flags = o.clean_session ? 0x02 : 0x00;
  if (o.username) flags |= 0x80;
  if (o.password) flags |= 0x40;
  body.push_back(flags);
  put_u16(body, o.keepalive_s);
  put_string(body, o.client_id);
  if (o.username) put_string(body, *o.username);
  if (o.password) put_string(body, *o.password);
  return frame(PacketType::connect, 0, body);
}

Bytes encode_publish(const Publish& p) {
  if (p.qos > 1) throw PacketError("QoS 2 is not supported");
  Bytes body;
  put_string(body, p.topic);
  if (p.qos > 0) put_u16(body, p.packet_id);
  body.insert(body.end(), p.payload.begin(), p.payload.end());
  const std::uint8_t flags = static_cast<std::uint8_t>((p.dup ? 0x08 : 0) | p.qos << 1 | (p.retain ? 1 : 0));
  return frame(PacketType::publish, flags, body);
}

Bytes encode_puback(std::uint16_t packet_id) {
  Bytes body;
  put_u16(body, packet_id);
  return frame(PacketType::puback, 0, body);
}

Bytes encode_subscribe(std::uint16_t packet_id, const std::string& filter, std::uint8_t qos) {
  Bytes body;
  put_u16(body, packet_id);
  put_string(body, filter);
  body.push_back(qos);
  return frame(PacketType::subscribe, 0x02, body);
}

Bytes encode_pingreq() { return frame(PacketType::pingreq, 0, {}); }
Bytes encode_disconnect() { return frame(PacketType::disconnect, 0, {}); }

void Decoder::feed(const std::uint8_t* data, std::size_t n) { buffer_.insert(buffer_.end(), data, data + n); }

std::optional<RawPacket> Decoder::next() {
  if (buffer_.size() < 2) return std::nullopt;
  std::size_t length = 0;
  std::size_t multiplier = 1;
  std::size_t pos = 1;
  while (true) {
    if (pos >= buffer_.size()) return std::nullopt;
    if (pos > 4) throw PacketError("malformed remaining length");
    const std::uint8_t byte = buffer_[pos++];
    length += (byte & 0x7f) * multiplier;
    multiplier *= 128;
    if ((byte & 0x80) == 0) break;
  }
  if (length > max_packet_) throw PacketError("incoming packet exceeds the size limit");
  if (buffer_.size() < pos + length) return std::nullopt;
  RawPacket p{static_cast<PacketType>(buffer_[0] >> 4), static_cast<std::uint8_t>(buffer_[0] & 0x0f),
              Bytes(buffer_.begin() + static_cast<std::ptrdiff_t>(pos),
                    buffer_.begin() + static_cast<std::ptrdiff_t>(pos + length))};
  buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(pos + length));
  return p;
}

std::uint8_t parse_connack(const RawPacket& p) {
  if (p.type != PacketType::connack || p.body.size() != 2) throw PacketError("bad CONNACK");
  return p.body[1];
}

Publish parse_publish(const RawPacket& p) {
  if (p.type != PacketType::publish) throw PacketError("not a PUBLISH");
  Publish out;
  out.dup = p.flags & 0x08;
  out.qos = (p.flags >> 1) & 0x03;
  out.retain = p.flags & 0x01;
  if (out.qos > 1) throw PacketError("QoS 2 is not supported");
  const std::uint16_t topic_len = get_u16(p.body, 0);
  std::size_t at = 2;
  if (at + topic_len > p.body.size()) throw PacketError("PUBLISH topic truncated");
  out.topic.assign(p.body.begin() + 2, p.body.begin() + 2 + topic_len);
  at += topic_len;
  if (out.qos > 0) {
    out.packet_id = get_u16(p.body, at);
    at += 2;
  }
  out.payload.assign(p.body.begin() + static_cast<std::ptrdiff_t>(at), p.body.end());
  return out;
}

std::uint16_t parse_packet_id(const RawPacket& p) {
  if (p.body.size() != 2) throw PacketError("bad acknowledgement packet");
  return get_u16(p.body, 0);
}

std::pair<std::uint16_t, std::uint8_t> parse_suback(const RawPacket& p) {
  if (p.type != PacketType::suback || p.body.size() < 3) throw PacketError("bad SUBACK");
  return {get_u16(p.body, 0), p.body[2]};
}

std::string connack_reason(std::uint8_t code) {
  switch (code) {
    case 0: return "accepted";
    case 1: return "unacceptable protocol version";
    case 2: return "identifier rejected";
    case 3: return "server unavailable";
    case 4: return "bad user name or password";
    case 5: return "not authorized";
    default: return "connack code " + std::to_string(code);
  }
}

}  // namespace fedplat::proto::mqtt
