#include <doctest.h>

#include <set>

#include "fedplat/proto/acl.hpp"
#include "fedplat/proto/topics.hpp"

using namespace fedplat::proto;

namespace {
const TopicScheme P("CAFEIN/TRUSTroke/CEP-1");
}

TEST_CASE("topic table") {
  CHECK(P.topic_for(MsgType::job_request) == "CAFEIN/TRUSTroke/CEP-1/job-requests");
  CHECK(P.topic_for(MsgType::job_reply, "hospital-a") == "CAFEIN/TRUSTroke/CEP-1/job-replies/hospital-a");
  CHECK(P.topic_for(MsgType::status_report, "ps") == "CAFEIN/TRUSTroke/CEP-1/status-reports/ps");
  CHECK(P.topic_for(MsgType::experiment_request) == "CAFEIN/TRUSTroke/CEP-1/control-center");
  CHECK(P.topic_for(MsgType::experiment_rejected) == "CAFEIN/TRUSTroke/CEP-1/parameter-server-replies");
  CHECK(P.topic_for(MsgType::job_abort) == P.job_requests());
  CHECK(P.topic_for(MsgType::model_reply) == "CAFEIN/TRUSTroke/CEP-1/model-replies");
  CHECK(P.topic_for(MsgType::model_reply, "obs") == "CAFEIN/TRUSTroke/CEP-1/model-replies/obs");
  CHECK(P.topic_for(MsgType::model_request, "obs") == "CAFEIN/TRUSTroke/CEP-1/model-requests/obs");

  CHECK_THROWS_AS(P.topic_for(MsgType::job_reply), TopicError);
  CHECK_THROWS_AS(P.topic_for(MsgType::status_report), TopicError);
  CHECK_THROWS_AS(P.topic_for(MsgType::job_request, "a"), TopicError);
  CHECK_THROWS_AS(P.topic_for(MsgType::job_reply, "a/b"), TopicError);
  CHECK_THROWS_AS(P.topic_for(MsgType::job_reply, "+"), TopicError);
  CHECK_THROWS_AS(TopicScheme("a/#"), TopicError);
}

TEST_CASE("per-client topics are distinct across clients and types") {
  std::set<std::string> seen;
  std::size_t n = 0;
  for (const char* c : {"a", "b", "ps", "observer"}) {
    for (MsgType t : {MsgType::job_reply, MsgType::model_request, MsgType::model_reply, MsgType::status_report}) {
      seen.insert(P.topic_for(t, c));
      ++n;
    }
  }
  CHECK(seen.size() == n);
}

TEST_CASE("wildcard matching") {
  CHECK(topic_matches("a/+/c", "a/b/c"));
  CHECK_FALSE(topic_matches("a/+/c", "a/b/x/c"));
  CHECK(topic_matches("a/#", "a"));
  CHECK(topic_matches("a/#", "a/b/c"));
  CHECK(topic_matches("#", "a/b"));
  CHECK_FALSE(topic_matches("a/b", "a/b/c"));
  CHECK_FALSE(topic_matches("a/b/c", "a/b"));
  CHECK(topic_matches("+/+", "a/b"));
  CHECK_FALSE(topic_matches("+", "a/b"));

  CHECK(filter_covers("a/+", "a/+"));
  CHECK(filter_covers("a/#", "a/+/c"));
  CHECK_FALSE(filter_covers("a/+", "a/#"));
  CHECK_FALSE(filter_covers("a/b", "a/+"));
  CHECK(filter_covers("a/+", "a/b"));

  CHECK(valid_topic_filter("a/+/#"));
  CHECK_FALSE(valid_topic_filter("a/#/b"));
  CHECK_FALSE(valid_topic_filter("a/b+"));
}

namespace {

std::vector<NodeIdentity> federation() {
  return {{"ps", Role::parameter_server},
          {"cc", Role::control_center},
          {"hospital-a", Role::client_participant},
          {"hospital-b", Role::client_participant},
          {"hospital-c", Role::client_participant},
          {"observer", Role::client_observer}};
}

// Independent reading of the topic diagram: who may publish and who may
// subscribe on each concrete topic. `owner` is the client suffix, if any.
bool expected(const NodeIdentity& id, AclAction action, MsgType type, const std::string& owner) {
  const bool pub = action == AclAction::publish;
  const bool own = owner == id.client_id;
  const bool cn = id.role == Role::client_participant || id.role == Role::client_observer;
  switch (id.role) {
    case Role::parameter_server:
      switch (type) {
        case MsgType::experiment_request: return !pub;
        case MsgType::experiment_accepted:
        case MsgType::experiment_rejected:
        case MsgType::job_request:
        case MsgType::job_abort: return pub;
        case MsgType::job_acknowledge:
        case MsgType::job_reply:
        case MsgType::job_failed:
        case MsgType::model_request: return !pub;
        case MsgType::model_reply: return pub;
        case MsgType::status_report: return pub && own;
      }
      break;
    case Role::control_center:
      switch (type) {
        case MsgType::experiment_request: return pub;
        case MsgType::experiment_accepted:
        case MsgType::experiment_rejected: return !pub;
        case MsgType::status_report: return !pub;
        case MsgType::model_request: return pub && own;
        case MsgType::model_reply: return !pub && own;
        default: return false;
      }
    default:
      break;
  }
  if (!cn) return false;
  const bool participant = id.role == Role::client_participant;
  switch (type) {
    case MsgType::job_request:
    case MsgType::job_abort: return participant && !pub;
    case MsgType::job_acknowledge:
    case MsgType::job_reply:
    case MsgType::job_failed: return participant && pub && own;
    case MsgType::model_request: return pub && own;
    case MsgType::model_reply: return !pub && (owner.empty() || own);
    case MsgType::status_report: return pub && own;
    default: return false;
  }
}

}  // namespace

TEST_CASE("standard rules allow exactly the diagram's arrows") {
  const auto ids = federation();
  const auto rules = standard_rules(P, ids);
  std::size_t checked = 0;
  for (const auto& id : ids) {
    for (MsgType t : kAllMsgTypes) {
      std::vector<std::string> owners;
      try {
        (void)P.topic_for(t);
        owners.push_back("");
      } catch (const TopicError&) {
      }
      try {
        (void)P.topic_for(t, "x");
        for (const auto& other : ids) owners.push_back(other.client_id);
      } catch (const TopicError&) {
      }
      for (const auto& owner : owners) {
        const std::string topic = owner.empty() ? P.topic_for(t) : P.topic_for(t, owner);
        for (AclAction a : {AclAction::publish, AclAction::subscribe}) {
          INFO(id.client_id, " ", msg_type_name(t), " ", topic, " ", a == AclAction::publish ? "pub" : "sub");
          CHECK(acl_check(rules, id.client_id, a, topic) == expected(id, a, t, owner));
          ++checked;
        }
      }
    }
  }
  CHECK(checked > 300);
}

TEST_CASE("role grants") {
  const auto rules = standard_rules(P, federation());
  CHECK_FALSE(acl_check(rules, "observer", AclAction::publish, P.job_replies("observer")));
  CHECK(acl_check(rules, "observer", AclAction::subscribe, P.model_replies()));
  CHECK_FALSE(acl_check(rules, "hospital-a", AclAction::publish, P.job_replies("hospital-b")));
  CHECK_FALSE(acl_check(rules, "observer", AclAction::subscribe, P.job_requests()));
  CHECK(acl_check(rules, "ps", AclAction::publish, P.model_replies("observer")));
  CHECK(acl_check(rules, "ps", AclAction::subscribe, P.prefix() + "/job-replies/+"));
  CHECK(acl_check(rules, "cc", AclAction::subscribe, P.prefix() + "/status-reports/+"));
  CHECK_FALSE(acl_check(rules, "cc", AclAction::subscribe, P.prefix() + "/#"));
  CHECK_FALSE(acl_check(rules, "stranger", AclAction::subscribe, P.job_requests()));
  for (const auto& r : rules) {
    CHECK(r.topic_pattern.find('#') == std::string::npos);
  }
}

TEST_CASE("standard rules need exactly one parameter server") {
  CHECK_THROWS_AS(standard_rules(P, {{"a", Role::client_participant}}), std::invalid_argument);
  CHECK_THROWS_AS(standard_rules(P, {{"p1", Role::parameter_server}, {"p2", Role::parameter_server}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(standard_rules(P, {{"p", Role::parameter_server}, {"p", Role::client_participant}}),
                  std::invalid_argument);
}
