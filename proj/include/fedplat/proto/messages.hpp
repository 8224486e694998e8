#pragma once

// Typed payloads carried inside Envelope::payload.

#include <optional>
#include <string>
#include <vector>

#include "fedplat/algo/algorithms.hpp"
#include "fedplat/model/config.hpp"
#include "fedplat/model/metrics.hpp"
#include "fedplat/model/tensor.hpp"
#include "fedplat/proto/acl.hpp"
#include "fedplat/util/json_reader.hpp"

namespace fedplat::proto {

using model::ModelWeights;
using util::Json;

struct JobRequest {
  model::ModelConfig model_config;
  model::TrainingSettings training;  // learning_rate is this round's rate
  algo::AlgorithmParams algorithm;
  ModelWeights global_weights;
  std::optional<ModelWeights> scaffold_c;
  double train_timeout_s = 60.0;
  double eval_timeout_s = 30.0;
  bool pre_eval = false;
  bool post_eval = true;
};

struct JobReply {
  ModelWeights new_weights;
  std::size_t n_train_samples = 0;
  std::size_t completed_epochs = 0;
  std::size_t steps = 0;
  bool truncated = false;  // stopped by the train deadline
  std::optional<model::EvalMetrics> pre_eval;
  std::optional<model::EvalMetrics> post_eval;
  std::optional<ModelWeights> delta_c;
  bool metrics_withheld = false;
};

struct JobFailed {
  std::string diagnostic;
};

struct JobAbort {
  std::string reason;
};

struct ModelReply {
  std::optional<ModelWeights> weights;
  std::optional<std::string> error;  // "not finalized", "unknown experiment"
  std::size_t final_round = 0;
  std::optional<model::ModelConfig> model_config;  // lets observers evaluate the weights
};

enum class NodeState { idle, training, evaluating, aggregating, waiting };

std::string_view node_state_name(NodeState s);  // "IDLE", ...
NodeState node_state_from_name(std::string_view name);

struct StatusReport {
  std::string node_id;
  Role role = Role::client_participant;
  NodeState state = NodeState::idle;
  std::string experiment_id;
  std::size_t round = 0;
  std::string timestamp;
  std::string diagnostic;
  Json detail = Json::object();  // role-specific extras, e.g. experiment progress
};

struct ExperimentRejected {
  std::string reason;  // "busy" or "invalid"
  std::vector<util::FieldError> errors;
};

Json to_json(const JobRequest& m);
Json to_json(const JobReply& m);
Json to_json(const JobFailed& m);
Json to_json(const JobAbort& m);
Json to_json(const ModelReply& m);
Json to_json(const StatusReport& m);
Json to_json(const ExperimentRejected& m);

// Each throws ProtocolError on a malformed payload.
JobRequest job_request_from_json(const Json& doc);
JobReply job_reply_from_json(const Json& doc);
JobFailed job_failed_from_json(const Json& doc);
JobAbort job_abort_from_json(const Json& doc);
ModelReply model_reply_from_json(const Json& doc);
StatusReport status_report_from_json(const Json& doc);
ExperimentRejected experiment_rejected_from_json(const Json& doc);

}  // namespace fedplat::proto
