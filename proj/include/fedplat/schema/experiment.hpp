#pragma once

// The experiment document shared by the control center and the parameter
// server. Both sides validate with the same code, so a rejected document
// reports the same error paths wherever it is checked.
//
// {
//   "experiment_id": "<uuid>",            (added by the control center)
//   "model_config": { ... },
//   "settings": {
//     "process":   { "rounds", "min_replies", "ack_timeout_s", "train_timeout_s",
//                    "eval_timeout_s", "pre_eval", "post_eval",
//                    "allow_metrics_upload_default", "history_rounds", "scheduler" },
//     "algorithm": { "kind", "mu", "retained_fraction", "server_step", "local_lr" },
//     "training":  { "batch_size", "epochs", "optimizer", "learning_rate", ... }
//   }
// }

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "fedplat/algo/algorithms.hpp"
#include "fedplat/algo/scheduler.hpp"
#include "fedplat/model/config.hpp"
#include "fedplat/util/json_reader.hpp"

namespace fedplat::schema {

using util::FieldError;
using util::Json;

struct ProcessSettings {
  std::size_t rounds = 1;
  std::size_t min_replies = 1;
  double ack_timeout_s = 30.0;
  double train_timeout_s = 60.0;
  double eval_timeout_s = 30.0;
  bool pre_eval = false;
  bool post_eval = true;
  bool allow_metrics_upload_default = true;
  std::size_t history_rounds = 16;  // per-round global snapshots kept on disk
  algo::SchedulerConfig scheduler;
};

struct ExperimentSpec {
  std::string experiment_id;
  model::ModelConfig model_config;
  ProcessSettings process;
  algo::AlgorithmParams algorithm;
  model::TrainingSettings training;
};

struct ValidationReport {
  bool valid = true;
  std::vector<FieldError> errors;
};

struct ValidationContext {
  bool require_experiment_id = false;
  std::optional<std::size_t> n_participants;  // checks min_replies when known
};

ValidationReport validate_experiment(const Json& doc, const ValidationContext& context = {});

// Throws util::ValidationError with the same errors validate_experiment reports.
ExperimentSpec parse_experiment(const Json& doc, const ValidationContext& context = {});

Json to_json(const ExperimentSpec& spec);
Json to_json(const ValidationReport& report);

}  // namespace fedplat::schema
