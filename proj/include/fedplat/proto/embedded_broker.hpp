#pragma once

#include <cstddef>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "fedplat/proto/acl.hpp"
#include "fedplat/proto/broker.hpp"

namespace fedplat::proto {

struct AuditEntry {
  std::string client_id;
  AclAction action = AclAction::publish;
  std::string topic;
  std::string at;
};

struct PublishRecord {
  std::string sender;
  std::string topic;
  std::size_t bytes = 0;
  bool retain = false;
  std::size_t deliveries = 0;
};

struct EmbeddedBrokerOptions {
  std::size_t queue_capacity = 1 << 14;
  std::size_t max_payload_bytes = 64u << 20;
};

// In-process broker with the same contract as an external one: client_id
// allowlist, ACL on publish and subscribe, retained store (latest per topic,
// empty payload clears), one bounded FIFO per session. Denials are dropped
// silently and recorded in the audit log.
class EmbeddedBroker : public Broker {
 public:
  EmbeddedBroker(std::vector<AclRule> rules, std::set<std::string> known_clients,
                 EmbeddedBrokerOptions options = {});
  ~EmbeddedBroker() override;

  std::unique_ptr<Session> connect(const std::string& client_id) override;

  std::vector<AuditEntry> audit_log() const;
  std::vector<PublishRecord> publish_log() const;
  std::size_t retained_count() const;

  struct State;

 private:
  std::shared_ptr<State> state_;
};

}  // namespace fedplat::proto
