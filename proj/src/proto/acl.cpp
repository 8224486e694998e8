#include "fedplat/proto/acl.hpp"

#include <set>
#include <stdexcept>

namespace fedplat::proto {

std::string_view role_name(Role role) {
  switch (role) {
    case Role::parameter_server: return "parameter_server";
    case Role::client_participant: return "client_participant";
    case Role::client_observer: return "client_observer";
    case Role::control_center: return "control_center";
  }
  return "?";
}

Role role_from_name(std::string_view name) {
  for (Role r : {Role::parameter_server, Role::client_participant, Role::client_observer,
                 Role::control_center}) {
    if (role_name(r) == name) return r;
  }
  throw std::invalid_argument("unknown role '" + std::string(name) + "'");
}

bool acl_check(const std::vector<AclRule>& rules, std::string_view client_id, AclAction action,
               std::string_view topic) {
  for (const auto& rule : rules) {
    if (rule.client_id != client_id || rule.action != action) continue;
    if (action == AclAction::publish ? topic_matches(rule.topic_pattern, topic)
                                     : filter_covers(rule.topic_pattern, topic)) {
      return true;
    }
  }
  return false;
}

std::vector<AclRule> standard_rules(const TopicScheme& scheme,
                                    const std::vector<NodeIdentity>& identities) {
  std::set<std::string> ids;
  std::size_t n_ps = 0;
  for (const auto& id : identities) {
    if (!ids.insert(id.client_id).second) {
      throw std::invalid_argument("duplicate client id '" + id.client_id + "'");
    }
    if (id.role == Role::parameter_server) ++n_ps;
  }
  if (n_ps != 1) {
    throw std::invalid_argument("a federation needs exactly one parameter server, got " +
                                std::to_string(n_ps));
  }

  std::vector<AclRule> rules;
  for (const auto& id : identities) {
    const std::string& c = id.client_id;
    auto pub = [&](std::string topic) { rules.push_back({c, AclAction::publish, std::move(topic)}); };
    auto sub = [&](std::string topic) { rules.push_back({c, AclAction::subscribe, std::move(topic)}); };
    const std::string& p = scheme.prefix();
    switch (id.role) {
      case Role::control_center:
        pub(scheme.control_center());
        sub(scheme.ps_replies());
        sub(p + "/status-reports/+");
        // The CC fetches final models under its own identity.
        pub(scheme.model_requests(c));
        sub(scheme.model_replies(c));
        break;
      case Role::parameter_server:
        sub(scheme.control_center());
        sub(p + "/job-replies/+");
        sub(p + "/model-requests/+");
        pub(scheme.ps_replies());
        pub(scheme.job_requests());
        pub(scheme.model_replies());
        pub(p + "/model-replies/+");
        pub(scheme.status_reports(c));
        break;
      case Role::client_participant:
        sub(scheme.job_requests());
        pub(scheme.job_replies(c));
        [[fallthrough]];
      case Role::client_observer:
        sub(scheme.model_replies());
        sub(scheme.model_replies(c));
        pub(scheme.model_requests(c));
        pub(scheme.status_reports(c));
        break;
    }
  }
  return rules;
}

}  // namespace fedplat::proto
