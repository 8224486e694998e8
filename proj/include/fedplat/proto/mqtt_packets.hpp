#pragma once

// MQTT 3.1.1 control packets used by the client adapter. Only QoS 0/1 and
// the packets a client sends or receives are covered.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedplat::proto::mqtt {

using Bytes = std::vector<std::uint8_t>;

enum class PacketType : std::uint8_t {
  connect = 1,
  connack = 2,
  publish = 3,
  puback = 4,
  subscribe = 8,
  suback = 9,
  pingreq = 12,
  pingresp = 13,
  disconnect = 14,
};

class PacketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConnectOptions {
  std::string client_id;
  std::optional<std::string> username;
  std::optional<std::string> password;
  std::uint16_t keepalive_s = 30;
  bool clean_session = true;
};

struct Publish {
  std::string topic;
  std::string payload;
  std::uint8_t qos = 0;
  bool retain = false;
  bool dup = false;
  std::uint16_t packet_id = 0;  // QoS > 0 only
};

struct RawPacket {
  PacketType type;
  std::uint8_t flags = 0;  // low nibble of the fixed header
  Bytes body;
};

Bytes encode_remaining_length(std::size_t n);
Bytes encode_connect(const ConnectOptions& o);
Bytes encode_publish(const Publish& p);
Bytes encode_puback(std::uint16_t packet_id);
Bytes encode_subscribe(std::uint16_t packet_id, const std::string& filter, std::uint8_t qos);
Bytes encode_pingreq();
Bytes encode_disconnect();

// Incremental decoder: feed bytes, take complete packets.
class Decoder {
 public:
  explicit Decoder(std::size_t max_packet = (64u << 20) + 1024) : max_packet_(max_packet) {}
  void feed(const std::uint8_t* data, std::size_t n);
  std::optional<RawPacket> next();  // throws PacketError on malformed input

 private:
  std::size_t max_packet_;
  Bytes buffer_;
};

// Return code of a CONNACK (0 means accepted).
std::uint8_t parse_connack(const RawPacket& p);
Publish parse_publish(const RawPacket& p);
std::uint16_t parse_packet_id(const RawPacket& p);  // PUBACK
// SUBACK: packet id and granted QoS (0x80 is failure).
std::pair<std::uint16_t, std::uint8_t> parse_suback(const RawPacket& p);

std::string connack_reason(std::uint8_t code);

}  // namespace fedplat::proto::mqtt
