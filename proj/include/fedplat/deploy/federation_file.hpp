#pragma once

// One JSON file describes a federation: topic prefix, broker endpoint and
// every node. Each daemon loads the same file and picks its own entry by
// client id, so ACL grants, the PS participant list and the CC registry
// cannot drift apart.

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fedplat/cc/control_center.hpp"
#include "fedplat/cn/client_node.hpp"
#include "fedplat/cn/data_loader.hpp"
#include "fedplat/proto/acl.hpp"
#include "fedplat/proto/broker.hpp"
#include "fedplat/proto/mqtt_client.hpp"
#include "fedplat/ps/parameter_server.hpp"
#include "fedplat/util/json_reader.hpp"

namespace fedplat::deploy {

struct NodeEntry {
  std::string client_id;
  proto::Role role = proto::Role::client_participant;
  std::optional<std::filesystem::path> artifact_root;  // overrides the federation default
  std::optional<util::Json> data;                      // loader spec, CN only
  bool allow_metrics_upload = true;
  std::string http_host = "127.0.0.1";  // CC only
  int http_port = 8080;
};

struct FederationFile {
  std::string prefix = "fedplat/federation/default";
  std::optional<proto::MqttEndpoint> broker;  // unset: embedded broker (fedsim only)
  std::chrono::milliseconds heartbeat{5000};
  double grace_s = 10.0;
  std::chrono::milliseconds submit_timeout{10000};
  std::filesystem::path artifact_root = "artifacts";
  std::vector<NodeEntry> nodes;

  const NodeEntry& node(const std::string& client_id) const;  // throws std::invalid_argument
  const NodeEntry& parameter_server() const;
  std::vector<proto::NodeIdentity> identities() const;
  std::filesystem::path artifacts_for(const NodeEntry& n) const;
};

// Throws util::ValidationError with every problem found.
FederationFile federation_from_json(const util::Json& doc);
FederationFile load_federation(const std::filesystem::path& path);

ps::PsConfig ps_config(const FederationFile& f);
cn::ClientConfig client_config(const FederationFile& f, const std::string& client_id);
cc::CcConfig cc_config(const FederationFile& f, const std::string& client_id);

std::vector<proto::AclRule> acl_rules(const FederationFile& f);
// Mosquitto-style acl_file text for the external broker.
std::string mosquitto_acl(const FederationFile& f);

}  // namespace fedplat::deploy
