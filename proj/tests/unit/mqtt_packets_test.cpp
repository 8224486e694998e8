#include <doctest.h>

#include "fedplat/proto/mqtt_packets.hpp"

using namespace fedplat::proto::mqtt;

TEST_CASE("remaining length encoding") {
  CHECK(encode_remaining_length(0) == Bytes{0x00});
  CHECK(encode_remaining_length(127) == Bytes{0x7f});
  CHECK(encode_remaining_length(128) == Bytes{0x80, 0x01});
  CHECK(encode_remaining_length(16383) == Bytes{0xff, 0x7f});
  CHECK(encode_remaining_length(16384) == Bytes{0x80, 0x80, 0x01});
  CHECK(encode_remaining_length(268435455) == Bytes{0xff, 0xff, 0xff, 0x7f});
  CHECK_THROWS_AS(encode_remaining_length(268435456), PacketError);
}

TEST_CASE("connect packet layout") {
  const Bytes b = encode_connect({"id", std::nullopt, std::nullopt, 30, true});
  const Bytes expected{0x10, 14, 0, 4, 'M', 'Q', 'T', 'T', 4, 0x02, 0, 30, 0, 2, 'i', 'd'};
  CHECK(b == expected);
  const Bytes auth = encode_connect({"id", "u", "p", 30, true});
  CHECK(auth[9] == 0xc2);
}

TEST_CASE("publish survives byte-at-a-time decoding") {
  Publish p{"a/b", std::string(300, 'z'), 1, true, false, 513};
  const Bytes wire = encode_publish(p);
  Decoder d;
  std::optional<RawPacket> got;
  for (std::size_t i = 0; i < wire.size(); ++i) {
    CHECK_FALSE(got);
    d.feed(&wire[i], 1);
    got = d.next();
  }
  REQUIRE(got);
  const Publish q = parse_publish(*got);
  CHECK(q.topic == "a/b");
  CHECK(q.payload == p.payload);
  CHECK(q.qos == 1);
  CHECK(q.retain);
  CHECK(q.packet_id == 513);
  CHECK_FALSE(d.next());
}

TEST_CASE("several packets in one read") {
  Bytes wire = encode_puback(7);
  const Bytes suback{0x90, 3, 0x00, 0x08, 0x01};
  wire.insert(wire.end(), suback.begin(), suback.end());
  const Bytes connack{0x20, 2, 0, 5};
  wire.insert(wire.end(), connack.begin(), connack.end());
  Decoder d;
  d.feed(wire.data(), wire.size());
  auto p1 = d.next();
  REQUIRE(p1);
  CHECK(p1->type == PacketType::puback);
  CHECK(parse_packet_id(*p1) == 7);
  auto p2 = d.next();
  REQUIRE(p2);
  CHECK(parse_suback(*p2) == std::pair<std::uint16_t, std::uint8_t>{8, 1});
  auto p3 = d.next();
  REQUIRE(p3);
  CHECK(parse_connack(*p3) == 5);
  CHECK(connack_reason(5) == "not authorized");
}

TEST_CASE("malformed input") {
  Decoder d;
  const Bytes bad{0x30, 0xff, 0xff, 0xff, 0xff, 0x01};
  d.feed(bad.data(), bad.size());
  CHECK_THROWS_AS(d.next(), PacketError);

  Decoder small(10);
  const Bytes big = encode_publish({"t", std::string(20, 'x'), 0, false, false, 0});
  small.feed(big.data(), big.size());
  CHECK_THROWS_AS(small.next(), PacketError);

  CHECK_THROWS_AS(encode_publish({"t", "", 2, false, false, 1}), PacketError);
  CHECK(encode_subscribe(1, "a/+", 1)[0] == 0x82);
}
