#include "fedplat/cc/control_center.hpp"

#include <spdlog/spdlog.h>

#include "fedplat/proto/codec.hpp"
#include "fedplat/proto/envelope.hpp"
#include "fedplat/util/clock.hpp"
#include "fedplat/util/uuid.hpp"

namespace fedplat::cc {

using proto::Envelope;
using proto::MsgType;
using Clock = std::chrono::steady_clock;

Json to_json(const NodeView& n) {
  return {{"client_id", n.client_id},   {"role", n.role},
          {"state", n.state},           {"experiment_id", n.experiment_id},
          {"round", n.round},           {"last_seen", n.last_seen},
          {"diagnostic", n.diagnostic}, {"stale", n.stale},
          {"unknown", n.unknown},       {"detail", n.detail}};
}

Json to_json(const NetworkView& v) {
  Json nodes = Json::array();
  for (const auto& n : v.nodes) nodes.push_back(to_json(n));
  return {{"generated_at", v.generated_at}, {"nodes", nodes}};
}

Json to_json(const ExperimentSummary& s) {
  Json doc{{"experiment_id", s.experiment_id}, {"status", s.status},
           {"rounds_total", s.rounds_total},   {"current_round", s.current_round},
           {"rounds", s.rounds},               {"last_metrics", s.last_metrics},
           {"diagnostic", s.diagnostic},       {"submitted_at", s.submitted_at}};
  doc["final_round"] = s.final_round ? Json(*s.final_round) : Json(nullptr);
  return doc;
}

ControlCenter::ControlCenter(CcConfig config, std::unique_ptr<proto::Session> session)
    : config_(std::move(config)), scheme_(config_.prefix), session_(std::move(session)) {}

ControlCenter::~ControlCenter() { stop(); }

void ControlCenter::start() {
  for (const std::string& f : {scheme_.ps_replies(), scheme_.prefix() + "/status-reports/+",
                               scheme_.model_replies(config_.client_id)}) {
    if (!session_->subscribe(f)) throw proto::BrokerError("subscription refused: " + f);
  }
  intake_ = std::thread([this] { intake(); });
}

void ControlCenter::stop() {
  if (stopping_.exchange(true)) return;
  if (intake_.joinable()) intake_.join();
  session_->close();
  cv_.notify_all();
}

schema::ValidationReport ControlCenter::validate(const Json& input) const {
  schema::ValidationContext ctx;
  std::size_t participants = 0;
  for (const auto& [_, role] : config_.registry) participants += role == proto::Role::client_participant;
  if (participants > 0) ctx.n_participants = participants;
  return schema::validate_experiment(input, ctx);
}

SubmitResult ControlCenter::submit(const Json& input) {
  std::lock_guard slot(submit_mu_);
  SubmitResult result;
  const auto report = validate(input);
  if (!report.valid) {
    result.outcome = SubmitOutcome::invalid;
    result.errors = report.errors;
    return result;
  }
  Json doc = input;
  if (!doc.contains("experiment_id")) doc["experiment_id"] = util::make_uuid_v4();
  const std::string id = doc.at("experiment_id").get<std::string>();
  result.experiment_id = id;
  {
    std::lock_guard lock(mu_);
    ps_replies_.erase(id);
  }
  const Envelope e = proto::make_envelope(MsgType::experiment_request, id, 0, config_.client_id, doc);
  session_->publish(scheme_.control_center(), proto::serialize(e), false);

  std::unique_lock lock(mu_);
  const bool answered = cv_.wait_for(lock, config_.submit_timeout, [&] { return ps_replies_.contains(id) || stopping_; });
  if (!answered || !ps_replies_.contains(id)) {
    result.outcome = SubmitOutcome::timeout;
    result.reason = "parameter server unreachable";
    return result;
  }
  const Envelope reply = ps_replies_.at(id);
  ps_replies_.erase(id);
  if (reply.msg_type == MsgType::experiment_accepted) {
    result.outcome = SubmitOutcome::accepted;
    auto& s = experiments_[id];
    s.experiment_id = id;
    if (s.status.empty()) s.status = "running";
    s.rounds_total = doc.at("settings").at("process").at("rounds").get<std::size_t>();
    s.submitted_at = util::now_utc();
    return result;
  }
  const auto rejected = proto::experiment_rejected_from_json(reply.payload);
  result.reason = rejected.reason;
  result.errors = rejected.errors;
  result.outcome = rejected.reason == "busy" ? SubmitOutcome::busy : SubmitOutcome::rejected;
  return result;
}

NetworkView ControlCenter::network() const {
  NetworkView view;
  view.generated_at = util::now_utc();
  const auto now = util::WallClock::now();
  std::lock_guard lock(mu_);
  std::map<std::string, NodeView> nodes;
  for (const auto& [id, role] : config_.registry) {
    NodeView& n = nodes[id];
    n.client_id = id;
    n.role = proto::role_name(role);
  }
  for (const auto& [id, r] : reports_) {
    NodeView& n = nodes[id];
    n.client_id = id;
    auto known = config_.registry.find(id);
    if (known == config_.registry.end()) {
      n.role = "unknown";
      n.unknown = true;
    } else {
      n.role = proto::role_name(known->second);
      n.unknown = known->second != r.role;
    }
    n.state = proto::node_state_name(r.state);
    n.experiment_id = r.experiment_id;
    n.round = r.round;
    n.last_seen = r.timestamp;
    n.diagnostic = r.diagnostic;
    n.detail = r.detail;
    try {
      n.stale = now - util::parse_utc(r.timestamp) > 3 * config_.heartbeat;
    } catch (const std::exception&) {
      n.stale = true;
    }
  }
  for (auto& [_, n] : nodes) view.nodes.push_back(std::move(n));
  return view;
}

std::vector<ExperimentSummary> ControlCenter::experiments() const {
  std::lock_guard lock(mu_);
  std::vector<ExperimentSummary> out;
  for (const auto& [_, s] : experiments_) out.push_back(s);
  return out;
}

std::optional<ExperimentSummary> ControlCenter::experiment(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = experiments_.find(id);
  if (it == experiments_.end()) return std::nullopt;
  return it->second;
}

std::optional<ExperimentSummary> ControlCenter::wait_for_experiment(const std::string& id,
                                                                   std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] {
    auto it = experiments_.find(id);
    return stopping_ || (it != experiments_.end() && it->second.status != "running" && it->second.status != "submitted");
  });
  auto it = experiments_.find(id);
  if (it == experiments_.end()) return std::nullopt;
  return it->second;
}

std::size_t ControlCenter::request_final_model(const std::string& id, const std::filesystem::path& destination) {
  std::lock_guard slot(model_mu_);
  {
    std::lock_guard lock(mu_);
    model_replies_.erase(id);
  }
  const Envelope e = proto::make_envelope(MsgType::model_request, id, 0, config_.client_id, Json::object());
  session_->publish(scheme_.model_requests(config_.client_id), proto::serialize(e), false);
  proto::ModelReply reply;
  {
    std::unique_lock lock(mu_);
    if (!cv_.wait_for(lock, config_.model_timeout, [&] { return model_replies_.contains(id) || stopping_; }) ||
        !model_replies_.contains(id)) {
      throw CcError(CcError::Kind::timeout, "parameter server unreachable");
    }
    reply = model_replies_.at(id);
    model_replies_.erase(id);
  }
  if (reply.error) {
    throw CcError(*reply.error == "not finalized" ? CcError::Kind::not_finalized : CcError::Kind::unknown_experiment,
                  *reply.error);
  }
  try {
    proto::write_weight_file(destination, *reply.weights);
  } catch (const std::exception& ex) {
    throw CcError(CcError::Kind::io, std::string("cannot write model: ") + ex.what());
  }
  return reply.final_round;
}

void ControlCenter::intake() {
  while (!stopping_) {
    const auto deadline = Clock::now() + std::chrono::milliseconds(100);
    auto msg = session_->receive(deadline);
    if (!msg) {
      std::this_thread::sleep_until(deadline);
      continue;
    }
    try {
      handle(*msg);
    } catch (const std::exception& ex) {
      spdlog::error("cc: {}", ex.what());
    }
  }
}

void ControlCenter::handle(const proto::Message& msg) {
  const std::string status_base = scheme_.prefix() + "/status-reports/";
  if (msg.topic.rfind(status_base, 0) == 0) {
    handle_status(msg.topic.substr(status_base.size()), msg);
    return;
  }
  Envelope e;
  try {
    e = proto::parse_envelope(msg.payload);
  } catch (const proto::ProtocolError& ex) {
    spdlog::warn("cc: undecodable message on {}: {}", msg.topic, ex.what());
    return;
  }
  if (msg.topic == scheme_.ps_replies() &&
      (e.msg_type == MsgType::experiment_accepted || e.msg_type == MsgType::experiment_rejected)) {
    {
      std::lock_guard lock(mu_);
      ps_replies_[e.experiment_id] = e;
    }
    cv_.notify_all();
  } else if (msg.topic == scheme_.model_replies(config_.client_id) && e.msg_type == MsgType::model_reply) {
    proto::ModelReply reply;
    try {
      reply = proto::model_reply_from_json(e.payload);
    } catch (const std::exception& ex) {
      spdlog::warn("cc: unusable model reply: {}", ex.what());
      return;
    }
    {
      std::lock_guard lock(mu_);
      model_replies_[e.experiment_id] = std::move(reply);
    }
    cv_.notify_all();
  }
}

void ControlCenter::handle_status(const std::string& node, const proto::Message& msg) {
  if (msg.payload.empty()) {  // retained report cleared
    std::lock_guard lock(mu_);
    reports_.erase(node);
    return;
  }
  Envelope e;
  proto::StatusReport r;
  try {
    e = proto::parse_envelope(msg.payload);
    r = proto::status_report_from_json(e.payload);
  } catch (const proto::ProtocolError& ex) {
    spdlog::warn("cc: undecodable status from {}: {}", node, ex.what());
    return;
  }
  if (r.node_id != node || e.sender_id != node) {
    spdlog::warn("cc: status on {}'s topic names {}", node, r.node_id);
    r.node_id = node;
  }
  {
    std::lock_guard lock(mu_);
    reports_[node] = r;
    if (r.role == proto::Role::parameter_server && !r.experiment_id.empty()) update_experiment_from_ps(r);
  }
  cv_.notify_all();
}

void ControlCenter::update_experiment_from_ps(const proto::StatusReport& r) {
  const Json& d = r.detail;
  if (!d.is_object() || !d.contains("experiment_status")) return;
  auto& s = experiments_[r.experiment_id];
  s.experiment_id = r.experiment_id;
  s.status = d.at("experiment_status").get<std::string>();
  s.rounds_total = d.value("rounds_total", s.rounds_total);
  if (r.round > 0) s.current_round = r.round;
  if (!r.diagnostic.empty()) s.diagnostic = r.diagnostic;
  if (d.contains("final_round")) s.final_round = d.at("final_round").get<std::size_t>();
  const Json& last = d.value("last_round", Json(nullptr));
  if (last.is_object() && last.contains("round")) {
    const std::size_t round = last.at("round").get<std::size_t>();
    auto pos = std::find_if(s.rounds.begin(), s.rounds.end(),
                            [&](const Json& j) { return j.at("round").get<std::size_t>() >= round; });
    if (pos == s.rounds.end() || pos->at("round").get<std::size_t>() != round) s.rounds.insert(pos, last);
    if (last.contains("weighted_post_eval")) s.last_metrics = last.at("weighted_post_eval");
    if (s.status != "running") s.current_round = round;
  }
}

}  // namespace fedplat::cc
