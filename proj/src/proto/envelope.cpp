#include "fedplat/proto/envelope.hpp"

#include "fedplat/util/clock.hpp"

namespace fedplat::proto {

Envelope make_envelope(MsgType type, std::string experiment_id, std::size_t round,
                       std::string sender_id, util::Json payload) {
  Envelope e;
  e.msg_type = type;
  e.experiment_id = std::move(experiment_id);
  e.round = round;
  e.sender_id = std::move(sender_id);
  e.sent_at = util::now_utc();
  e.payload = std::move(payload);
  return e;
}

std::string serialize(const Envelope& e) {
  const util::Json doc{{"version", e.version},
                       {"msg_type", msg_type_name(e.msg_type)},
                       {"experiment_id", e.experiment_id},
                       {"round", e.round},
                       {"sender_id", e.sender_id},
                       {"sent_at", e.sent_at},
                       {"payload", e.payload}};
  std::string out = doc.dump();
  if (out.size() > kMaxPayloadBytes) {
    throw ProtocolError("message of " + std::to_string(out.size()) + " bytes exceeds the " +
                        std::to_string(kMaxPayloadBytes) + "-byte limit");
  }
  return out;
}

Envelope parse_envelope(const std::string& bytes) {
  if (bytes.size() > kMaxPayloadBytes) throw ProtocolError("message exceeds the size limit");
  util::Json doc;
  try {
    doc = util::Json::parse(bytes);
  } catch (const util::Json::exception& ex) {
    throw ProtocolError(std::string("envelope is not JSON: ") + ex.what());
  }
  if (!doc.is_object()) throw ProtocolError("envelope must be an object");
  Envelope e;
  try {
    e.version = doc.at("version").get<int>();
    if (e.version != kProtocolVersion) {
      throw ProtocolError("unsupported protocol version " + std::to_string(e.version));
    }
    const auto name = doc.at("msg_type").get<std::string>();
    const auto type = msg_type_from_name(name);
    if (!type) throw ProtocolError("unknown message type '" + name + "'");
    e.msg_type = *type;
    e.experiment_id = doc.at("experiment_id").get<std::string>();
    e.round = doc.at("round").get<std::size_t>();
    e.sender_id = doc.at("sender_id").get<std::string>();
    e.sent_at = doc.at("sent_at").get<std::string>();
    e.payload = doc.at("payload");
  } catch (const util::Json::exception& ex) {
    throw ProtocolError(std::string("malformed envelope: ") + ex.what());
  }
  return e;
}

}  // namespace fedplat::proto
