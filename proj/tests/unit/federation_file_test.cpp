#include <doctest.h>

#include <algorithm>

#include "fedplat/deploy/federation_file.hpp"

using namespace fedplat;
using util::Json;

namespace {

Json sample() {
  return Json::parse(R"({
    "prefix": "fl/test",
    "broker": {"host": "broker.local", "port": 8883, "tls": true, "ca_file": "ca.pem"},
    "heartbeat_ms": 250,
    "artifact_root": "/srv/fl",
    "nodes": [
      {"client_id": "ps", "role": "parameter_server"},
      {"client_id": "cc", "role": "control_center", "http": {"host": "0.0.0.0", "port": 9000}},
      {"client_id": "a", "role": "client_participant",
       "data": {"kind": "synthetic", "n_samples": 50, "n_features": 3, "prevalence": 0.2}},
      {"client_id": "b", "role": "client_participant", "allow_metrics_upload": false, "artifact_root": "/data/b"},
      {"client_id": "obs", "role": "client_observer"}
    ]})");
}

std::vector<std::string> paths(const util::ValidationError& e) {
  std::vector<std::string> out;
  for (const auto& f : e.errors()) out.push_back(f.path);
  return out;
}

}  // namespace

TEST_CASE("federation file derives consistent node configurations") {
  const auto f = deploy::federation_from_json(sample());
  REQUIRE(f.broker);
  CHECK(f.broker->host == "broker.local");
  CHECK(f.broker->port == 8883);
  CHECK(f.broker->tls);
  CHECK(f.broker->ca_file == std::optional<std::string>("ca.pem"));

  const auto ps = deploy::ps_config(f);
  CHECK(ps.prefix == "fl/test");
  CHECK(ps.participants == std::vector<std::string>{"a", "b"});
  CHECK(ps.observers == std::vector<std::string>{"obs"});
  CHECK(ps.artifact_root == std::filesystem::path("/srv/fl/ps"));
  CHECK(ps.heartbeat == std::chrono::milliseconds(250));

  const auto a = deploy::client_config(f, "a");
  REQUIRE(a.data);
  CHECK(a.data->has_train());
  CHECK(a.allow_metrics_upload);
  const auto b = deploy::client_config(f, "b");
  CHECK_FALSE(b.data);
  CHECK_FALSE(b.allow_metrics_upload);
  CHECK(b.artifact_root == std::filesystem::path("/data/b"));
  CHECK_THROWS_AS(deploy::client_config(f, "ps"), std::invalid_argument);
  CHECK_THROWS_AS(deploy::client_config(f, "nobody"), std::invalid_argument);

  const auto cc = deploy::cc_config(f, "cc");
  CHECK(cc.registry.size() == 4);
  CHECK(cc.registry.at("obs") == proto::Role::client_observer);
  CHECK(f.node("cc").http_port == 9000);
}

TEST_CASE("embedded broker and defaults") {
  auto doc = sample();
  doc["broker"] = "embedded";
  doc.erase("heartbeat_ms");
  const auto f = deploy::federation_from_json(doc);
  CHECK_FALSE(f.broker);
  CHECK(f.heartbeat == std::chrono::milliseconds(5000));
}

TEST_CASE("federation file errors carry paths") {
  auto doc = sample();
  doc["nodes"][2]["role"] = "hospital";
  doc["nodes"][3]["client_id"] = "a";
  doc["nodes"][4]["colour"] = "blue";
  doc["broker"]["port"] = 0;
  try {
    deploy::federation_from_json(doc);
    FAIL("expected a validation error");
  } catch (const util::ValidationError& e) {
    const auto p = paths(e);
    CHECK(std::count(p.begin(), p.end(), "nodes/2/role") == 1);
    CHECK(std::count(p.begin(), p.end(), "nodes/3/client_id") == 1);
    CHECK(std::count(p.begin(), p.end(), "nodes/4/colour") == 1);
    CHECK(std::count(p.begin(), p.end(), "broker/port") == 1);
  }

  auto two_servers = sample();
  two_servers["nodes"][1]["role"] = "parameter_server";
  CHECK_THROWS_AS(deploy::federation_from_json(two_servers), util::ValidationError);
  CHECK_THROWS_AS(deploy::federation_from_json(Json::parse(R"({"prefix": "x"})")), util::ValidationError);
}

TEST_CASE("broker ACL export follows least privilege") {
  const auto f = deploy::federation_from_json(sample());
  const auto text = deploy::mosquitto_acl(f);
  CHECK(text.find("user a\n") != std::string::npos);
  CHECK(text.find("topic write fl/test/job-replies/a\n") != std::string::npos);
  CHECK(text.find("topic write fl/test/job-replies/b\n") != std::string::npos);
  // Only the owner may write its reply topic, and the observer gets no jobs.
  const auto rules = deploy::acl_rules(f);
  CHECK_FALSE(proto::acl_check(rules, "a", proto::AclAction::publish, "fl/test/job-replies/b"));
  CHECK_FALSE(proto::acl_check(rules, "obs", proto::AclAction::subscribe, "fl/test/job-requests"));
  CHECK(proto::acl_check(rules, "a", proto::AclAction::subscribe, "fl/test/job-requests"));
}
