#include "fedplat/bench/federation.hpp"

#include <stdexcept>

namespace fedplat::bench {

InProcessFederation::InProcessFederation(FederationOptions options)
    : options_(std::move(options)), scheme_(options_.prefix) {
  std::vector<proto::NodeIdentity> ids{{options_.ps_id, proto::Role::parameter_server},
                                       {options_.cc_id, proto::Role::control_center}};
  std::map<std::string, proto::Role> registry{{options_.ps_id, proto::Role::parameter_server}};
  ps::PsConfig ps_config;
  ps_config.prefix = options_.prefix;
  ps_config.artifact_root = options_.artifact_root / "ps";
  ps_config.heartbeat = options_.heartbeat;
  ps_config.grace_s = options_.grace_s;
  for (const auto& p : options_.participants) {
    ids.push_back({p.client_id, proto::Role::client_participant});
    registry[p.client_id] = proto::Role::client_participant;
    ps_config.participants.push_back(p.client_id);
  }
  if (options_.observer) {
    ids.push_back({options_.observer->client_id, proto::Role::client_observer});
    registry[options_.observer->client_id] = proto::Role::client_observer;
    ps_config.observers.push_back(options_.observer->client_id);
  }
  std::set<std::string> known;
  for (const auto& i : ids) known.insert(i.client_id);
  broker_ = std::make_unique<proto::EmbeddedBroker>(proto::standard_rules(scheme_, ids), known);

  ps_ = std::make_unique<ps::ParameterServer>(ps_config, broker_->connect(options_.ps_id));
  auto make_client = [&](const ParticipantSpec& p, proto::Role role) {
    cn::ClientConfig c;
    c.client_id = p.client_id;
    c.role = role;
    c.prefix = options_.prefix;
    c.artifact_root = options_.artifact_root / p.client_id;
    c.allow_metrics_upload = p.allow_metrics_upload;
    c.data = p.data;
    c.heartbeat = options_.heartbeat;
    return std::make_unique<cn::ClientNode>(c, broker_->connect(p.client_id));
  };
  for (const auto& p : options_.participants) {
    if (p.data) clients_.push_back(make_client(p, proto::Role::client_participant));
  }
  if (options_.observer && options_.observer->data) {
    observer_ = make_client(*options_.observer, proto::Role::client_observer);
  }
  cc::CcConfig cc_config;
  cc_config.client_id = options_.cc_id;
  cc_config.prefix = options_.prefix;
  cc_config.registry = registry;
  cc_config.heartbeat = options_.heartbeat;
  cc_config.submit_timeout = options_.submit_timeout;
  cc_ = std::make_unique<cc::ControlCenter>(cc_config, broker_->connect(options_.cc_id));
}

InProcessFederation::~InProcessFederation() { stop(); }

void InProcessFederation::start() {
  if (started_) return;
  started_ = true;
  ps_->start();
  for (auto& c : clients_) c->start();
  if (observer_) observer_->start();
  cc_->start();
}

void InProcessFederation::stop() {
  if (!started_) return;
  started_ = false;
  cc_->stop();
  if (observer_) observer_->stop();
  for (auto& c : clients_) c->stop();
  ps_->stop();
}

cn::ClientNode& InProcessFederation::client(const std::string& id) {
  for (auto& c : clients_) {
    if (c->client_id() == id) return *c;
  }
  if (observer_ && observer_->client_id() == id) return *observer_;
  throw std::out_of_range("no running node " + id);
}

std::unique_ptr<proto::Session> InProcessFederation::connect_as(const std::string& client_id) {
  return broker_->connect(client_id);
}

ps::ExperimentRecord InProcessFederation::run(const util::Json& experiment, std::chrono::milliseconds timeout) {
  const auto submitted = cc_->submit(experiment);
  if (submitted.outcome != cc::SubmitOutcome::accepted) {
    std::string why = submitted.reason;
    for (const auto& e : submitted.errors) why += " " + e.path + ": " + e.message + ";";
    throw std::runtime_error("experiment not accepted:" + why);
  }
  auto record = ps_->wait_for_completion(submitted.experiment_id, timeout);
  if (!record || record->status == ps::ExperimentStatus::running) {
    throw std::runtime_error("experiment " + submitted.experiment_id + " did not finish in time");
  }
  return *record;
}

}  // namespace fedplat::bench
