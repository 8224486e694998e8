#include "fedplat/deploy/federation_file.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace fedplat::deploy {

namespace fs = std::filesystem;

namespace {

proto::MqttEndpoint endpoint_from(util::ObjectReader& r) {
  proto::MqttEndpoint e;
  if (auto v = r.string("host", false)) e.host = *v;
  if (auto v = r.integer("port", false)) {
    if (*v < 1 || *v > 65535) {
      r.fail("port", "must be in 1..65535");
    } else {
      e.port = static_cast<std::uint16_t>(*v);
    }
  }
  e.username = r.string("username", false);
  e.password = r.string("password", false);
  if (auto v = r.boolean("tls", false)) e.tls = *v;
  e.ca_file = r.string("ca_file", false);
  if (auto v = r.boolean("verify_peer", false)) e.verify_peer = *v;
  if (auto v = r.integer("keepalive_s", false)) e.keepalive_s = static_cast<std::uint16_t>(*v);
  r.finish();
  return e;
}

}  // namespace

const NodeEntry& FederationFile::node(const std::string& client_id) const {
  for (const auto& n : nodes) {
    if (n.client_id == client_id) return n;
  }
  throw std::invalid_argument("no node '" + client_id + "' in the federation file");
}

const NodeEntry& FederationFile::parameter_server() const {
  for (const auto& n : nodes) {
    if (n.role == proto::Role::parameter_server) return n;
  }
  throw std::invalid_argument("the federation has no parameter server");
}

std::vector<proto::NodeIdentity> FederationFile::identities() const {
  std::vector<proto::NodeIdentity> out;
  for (const auto& n : nodes) out.push_back({n.client_id, n.role});
  return out;
}

fs::path FederationFile::artifacts_for(const NodeEntry& n) const {
  return n.artifact_root.value_or(artifact_root / n.client_id);
}

FederationFile federation_from_json(const util::Json& doc) {
  std::vector<util::FieldError> errors;
  FederationFile f;
  util::ObjectReader r(doc, "", errors);
  if (auto v = r.string("prefix", false)) f.prefix = *v;
  if (const auto* b = r.field("broker", false); b && !b->is_null()) {
    if (b->is_string() && b->get<std::string>() == "embedded") {
      f.broker.reset();
    } else {
      util::ObjectReader br(*b, "broker", errors);
      if (br.ok()) f.broker = endpoint_from(br);
    }
  }
  if (auto v = r.integer("heartbeat_ms", false)) {
    if (*v < 10) r.fail("heartbeat_ms", "must be at least 10");
    f.heartbeat = std::chrono::milliseconds(*v);
  }
  if (auto v = r.number("grace_s", false)) f.grace_s = *v;
  if (auto v = r.integer("submit_timeout_ms", false)) f.submit_timeout = std::chrono::milliseconds(*v);
  if (auto v = r.string("artifact_root", false)) f.artifact_root = *v;

  std::set<std::string> ids;
  std::size_t servers = 0;
  if (const auto* list = r.field("nodes", true)) {
    if (!list->is_array()) {
      r.fail("nodes", "must be an array");
    } else {
      for (std::size_t i = 0; i < list->size(); ++i) {
        util::ObjectReader nr((*list)[i], "nodes/" + std::to_string(i), errors);
        if (!nr.ok()) continue;
        NodeEntry n;
        if (auto v = nr.string("client_id", true)) n.client_id = *v;
        if (auto v = nr.choice<proto::Role>("role", true,
                                            {{"parameter_server", proto::Role::parameter_server},
                                             {"client_participant", proto::Role::client_participant},
                                             {"client_observer", proto::Role::client_observer},
                                             {"control_center", proto::Role::control_center}})) {
          n.role = *v;
        }
        if (auto v = nr.string("artifact_root", false)) n.artifact_root = fs::path(*v);
        if (const auto* d = nr.field("data", false)) n.data = *d;
        if (auto v = nr.boolean("allow_metrics_upload", false)) n.allow_metrics_upload = *v;
        if (const auto* h = nr.field("http", false)) {
          util::ObjectReader hr(*h, nr.path_of("http"), errors);
          if (hr.ok()) {
            if (auto v = hr.string("host", false)) n.http_host = *v;
            if (auto v = hr.integer("port", false)) n.http_port = static_cast<int>(*v);
            hr.finish();
          }
        }
        nr.finish();
        if (!n.client_id.empty() && !ids.insert(n.client_id).second) {
          nr.fail("client_id", "duplicate client id '" + n.client_id + "'");
        }
        if (n.role == proto::Role::parameter_server) ++servers;
        f.nodes.push_back(std::move(n));
      }
      if (servers != 1) r.fail("nodes", "exactly one parameter_server is required");
    }
  }
  r.finish();
  if (!errors.empty()) throw util::ValidationError(std::move(errors));
  return f;
}

FederationFile load_federation(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  util::Json doc;
  try {
    doc = util::Json::parse(in);
  } catch (const util::Json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  return federation_from_json(doc);
}

ps::PsConfig ps_config(const FederationFile& f) {
  const auto& self = f.parameter_server();
  ps::PsConfig c;
  c.prefix = f.prefix;
  c.artifact_root = f.artifacts_for(self);
  c.heartbeat = f.heartbeat;
  c.grace_s = f.grace_s;
  for (const auto& n : f.nodes) {
    if (n.role == proto::Role::client_participant) c.participants.push_back(n.client_id);
    if (n.role == proto::Role::client_observer) c.observers.push_back(n.client_id);
  }
  return c;
}

cn::ClientConfig client_config(const FederationFile& f, const std::string& client_id) {
  const auto& n = f.node(client_id);
  if (n.role != proto::Role::client_participant && n.role != proto::Role::client_observer) {
    throw std::invalid_argument("'" + client_id + "' is not a client node");
  }
  cn::ClientConfig c;
  c.client_id = n.client_id;
  c.role = n.role;
  c.prefix = f.prefix;
  c.artifact_root = f.artifacts_for(n);
  c.allow_metrics_upload = n.allow_metrics_upload;
  c.heartbeat = f.heartbeat;
  if (n.data) c.data = cn::make_data_loader(cn::data_loader_spec_from_json(*n.data));
  return c;
}

cc::CcConfig cc_config(const FederationFile& f, const std::string& client_id) {
  const auto& n = f.node(client_id);
  if (n.role != proto::Role::control_center) throw std::invalid_argument("'" + client_id + "' is not a control center");
  cc::CcConfig c;
  c.client_id = n.client_id;
  c.prefix = f.prefix;
  c.heartbeat = f.heartbeat;
  c.submit_timeout = f.submit_timeout;
  for (const auto& m : f.nodes) {
    if (m.client_id != client_id) c.registry[m.client_id] = m.role;
  }
  return c;
}

std::vector<proto::AclRule> acl_rules(const FederationFile& f) {
  return proto::standard_rules(proto::TopicScheme(f.prefix), f.identities());
}

std::string mosquitto_acl(const FederationFile& f) {
  std::map<std::string, std::vector<const proto::AclRule*>> by_user;
  const auto rules = acl_rules(f);
  for (const auto& r : rules) by_user[r.client_id].push_back(&r);
  std::ostringstream out;
  for (const auto& [user, list] : by_user) {
    out << "user " << user << "\n";
    for (const auto* r : list) {
      out << "topic " << (r->action == proto::AclAction::publish ? "write " : "read ") << r->topic_pattern << "\n";
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace fedplat::deploy
