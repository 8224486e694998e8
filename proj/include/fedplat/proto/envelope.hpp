#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <tuple>

#include "fedplat/proto/topics.hpp"
#include "fedplat/util/json_reader.hpp"

namespace fedplat::proto {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::size_t kMaxPayloadBytes = 64u << 20;

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Envelope {
  int version = kProtocolVersion;
  MsgType msg_type = MsgType::status_report;
  std::string experiment_id;
  std::size_t round = 0;
  std::string sender_id;
  std::string sent_at;  // UTC, util::format_utc
  util::Json payload = util::Json::object();
};

Envelope make_envelope(MsgType type, std::string experiment_id, std::size_t round,
                       std::string sender_id, util::Json payload);

// Throws ProtocolError when the serialized form exceeds kMaxPayloadBytes.
std::string serialize(const Envelope& envelope);
// Throws ProtocolError on oversize input, bad JSON, unknown type or version.
Envelope parse_envelope(const std::string& bytes);

// Identity of a logical message; redelivered copies share it.
struct DedupeKey {
  std::string experiment_id;
  std::size_t round = 0;
  MsgType msg_type = MsgType::status_report;
  std::string sender_id;

  friend auto operator<=>(const DedupeKey&, const DedupeKey&) = default;
};

inline DedupeKey dedupe_key(const Envelope& e) {
  return {e.experiment_id, e.round, e.msg_type, e.sender_id};
}

}  // namespace fedplat::proto
