#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fedplat/proto/topics.hpp"

namespace fedplat::proto {

enum class Role { parameter_server, client_participant, client_observer, control_center };

std::string_view role_name(Role role);
Role role_from_name(std::string_view name);  // throws std::invalid_argument

struct NodeIdentity {
  std::string client_id;
  Role role = Role::client_participant;
};

enum class AclAction { publish, subscribe };

struct AclRule {
  std::string client_id;
  AclAction action = AclAction::publish;
  std::string topic_pattern;
};

// Default deny. A publish is allowed when a rule's pattern matches the topic;
// a subscription when a rule's pattern covers the requested filter.
bool acl_check(const std::vector<AclRule>& rules, std::string_view client_id, AclAction action,
               std::string_view topic);

// Least-privilege grants for each role. Throws std::invalid_argument unless
// there is exactly one parameter server and client ids are unique.
std::vector<AclRule> standard_rules(const TopicScheme& scheme,
                                    const std::vector<NodeIdentity>& identities);

}  // namespace fedplat::proto
