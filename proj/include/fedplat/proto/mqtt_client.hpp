#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "fedplat/proto/broker.hpp"

namespace fedplat::proto {

struct MqttEndpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 1883;
  std::optional<std::string> username;
  std::optional<std::string> password;
  bool tls = false;
  std::optional<std::string> ca_file;  // system store when unset
  bool verify_peer = true;
  std::uint16_t keepalive_s = 30;
  std::chrono::milliseconds ack_timeout{5000};
  int max_retries = 3;
  std::size_t queue_capacity = 1 << 14;
};

// Broker reached over MQTT 3.1.1 on TCP, optionally TLS-wrapped. Publishes
// and subscriptions use QoS 1, so deliveries are at-least-once; consumers
// deduplicate with DedupeKey.
class MqttBroker : public Broker {
 public:
  explicit MqttBroker(MqttEndpoint endpoint);

  // Throws ConnectionRefused when the broker rejects the CONNECT and
  // BrokerError when it cannot be reached.
  std::unique_ptr<Session> connect(const std::string& client_id) override;

 private:
  MqttEndpoint endpoint_;
};

}  // namespace fedplat::proto
