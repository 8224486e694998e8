#include "fedplat/proto/messages.hpp"

#include "fedplat/proto/codec.hpp"
#include "fedplat/proto/envelope.hpp"

namespace fedplat::proto {

namespace {

template <typename Fn>
auto decoding(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const ProtocolError&) {
    throw;
  } catch (const std::exception& e) {
    throw ProtocolError(std::string("malformed ") + what + " payload: " + e.what());
  }
}

template <typename T>
std::optional<T> optional_field(const Json& doc, const char* key, T (*convert)(const Json&)) {
  if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
  return convert(doc.at(key));
}

void put_metrics(Json& doc, const char* key, const std::optional<model::EvalMetrics>& m) {
  if (m) doc[key] = model::to_json(*m);
}

}  // namespace

std::string_view node_state_name(NodeState s) {
  switch (s) {
    case NodeState::idle: return "IDLE";
    case NodeState::training: return "TRAINING";
    case NodeState::evaluating: return "EVALUATING";
    case NodeState::aggregating: return "AGGREGATING";
    case NodeState::waiting: return "WAITING";
  }
  return "?";
}

NodeState node_state_from_name(std::string_view name) {
  for (NodeState s : {NodeState::idle, NodeState::training, NodeState::evaluating,
                      NodeState::aggregating, NodeState::waiting}) {
    if (node_state_name(s) == name) return s;
  }
  throw std::invalid_argument("unknown node state '" + std::string(name) + "'");
}

Json to_json(const JobRequest& m) {
  Json doc{{"model_config", model::to_json(m.model_config)},
           {"training", model::to_json(m.training)},
           {"algorithm", algo::to_json(m.algorithm)},
           {"global_weights", weights_to_json(m.global_weights)},
           {"train_timeout_s", m.train_timeout_s},
           {"eval_timeout_s", m.eval_timeout_s},
           {"pre_eval", m.pre_eval},
           {"post_eval", m.post_eval}};
  if (m.scaffold_c) doc["scaffold_c"] = weights_to_json(*m.scaffold_c);
  return doc;
}

JobRequest job_request_from_json(const Json& doc) {
  return decoding("JobRequest", [&] {
    JobRequest m;
    m.model_config = model::model_config_from_json(doc.at("model_config"));
    m.training = model::training_settings_from_json(doc.at("training"));
    m.algorithm = algo::algorithm_params_from_json(doc.at("algorithm"));
    m.global_weights = weights_from_json(doc.at("global_weights"));
    m.scaffold_c = optional_field<ModelWeights>(doc, "scaffold_c", &weights_from_json);
    m.train_timeout_s = doc.at("train_timeout_s").get<double>();
    m.eval_timeout_s = doc.at("eval_timeout_s").get<double>();
    m.pre_eval = doc.at("pre_eval").get<bool>();
    m.post_eval = doc.at("post_eval").get<bool>();
    return m;
  });
}

Json to_json(const JobReply& m) {
  Json doc{{"new_weights", weights_to_json(m.new_weights)},
           {"n_train_samples", m.n_train_samples},
           {"completed_epochs", m.completed_epochs},
           {"steps", m.steps},
           {"truncated", m.truncated},
           {"metrics_withheld", m.metrics_withheld}};
  put_metrics(doc, "pre_eval", m.pre_eval);
  put_metrics(doc, "post_eval", m.post_eval);
  if (m.delta_c) doc["delta_c"] = weights_to_json(*m.delta_c);
  return doc;
}

JobReply job_reply_from_json(const Json& doc) {
  return decoding("JobReply", [&] {
    JobReply m;
    m.new_weights = weights_from_json(doc.at("new_weights"));
    m.n_train_samples = doc.at("n_train_samples").get<std::size_t>();
    m.completed_epochs = doc.at("completed_epochs").get<std::size_t>();
    m.steps = doc.at("steps").get<std::size_t>();
    m.truncated = doc.at("truncated").get<bool>();
    m.metrics_withheld = doc.at("metrics_withheld").get<bool>();
    m.pre_eval = optional_field<model::EvalMetrics>(doc, "pre_eval", &model::eval_metrics_from_json);
    m.post_eval = optional_field<model::EvalMetrics>(doc, "post_eval", &model::eval_metrics_from_json);
    m.delta_c = optional_field<ModelWeights>(doc, "delta_c", &weights_from_json);
    return m;
  });
}

Json to_json(const JobFailed& m) { return {{"diagnostic", m.diagnostic}}; }

JobFailed job_failed_from_json(const Json& doc) {
  return decoding("JobFailed", [&] { return JobFailed{doc.at("diagnostic").get<std::string>()}; });
}

Json to_json(const JobAbort& m) { return {{"reason", m.reason}}; }

JobAbort job_abort_from_json(const Json& doc) {
  return decoding("JobAbort", [&] { return JobAbort{doc.value("reason", std::string())}; });
}

Json to_json(const ModelReply& m) {
  Json doc{{"final_round", m.final_round}};
  if (m.weights) doc["weights"] = weights_to_json(*m.weights);
  if (m.error) doc["error"] = *m.error;
  if (m.model_config) doc["model_config"] = model::to_json(*m.model_config);
  return doc;
}

ModelReply model_reply_from_json(const Json& doc) {
  return decoding("ModelReply", [&] {
    ModelReply m;
    m.final_round = doc.value("final_round", std::size_t{0});
    m.weights = optional_field<ModelWeights>(doc, "weights", &weights_from_json);
    if (doc.contains("error")) m.error = doc.at("error").get<std::string>();
    if (doc.contains("model_config")) m.model_config = model::model_config_from_json(doc.at("model_config"));
    if (!m.weights && !m.error) throw ProtocolError("ModelReply carries neither weights nor error");
    return m;
  });
}

Json to_json(const StatusReport& m) {
  return {{"node_id", m.node_id},
          {"role", role_name(m.role)},
          {"state", node_state_name(m.state)},
          {"experiment_id", m.experiment_id},
          {"round", m.round},
          {"timestamp", m.timestamp},
          {"diagnostic", m.diagnostic},
          {"detail", m.detail}};
}

StatusReport status_report_from_json(const Json& doc) {
  return decoding("StatusReport", [&] {
    StatusReport m;
    m.node_id = doc.at("node_id").get<std::string>();
    m.role = role_from_name(doc.at("role").get<std::string>());
    m.state = node_state_from_name(doc.at("state").get<std::string>());
    m.experiment_id = doc.value("experiment_id", std::string());
    m.round = doc.value("round", std::size_t{0});
    m.timestamp = doc.at("timestamp").get<std::string>();
    m.diagnostic = doc.value("diagnostic", std::string());
    if (doc.contains("detail") && doc.at("detail").is_object()) m.detail = doc.at("detail");
    return m;
  });
}

Json to_json(const ExperimentRejected& m) {
  return {{"reason", m.reason}, {"errors", util::to_json(m.errors)}};
}

ExperimentRejected experiment_rejected_from_json(const Json& doc) {
  return decoding("ExperimentRejected", [&] {
    ExperimentRejected m;
    m.reason = doc.at("reason").get<std::string>();
    if (doc.contains("errors")) m.errors = util::field_errors_from_json(doc.at("errors"));
    return m;
  });
}

}  // namespace fedplat::proto
