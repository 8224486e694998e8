#include "fedplat/schema/experiment.hpp"

namespace fedplat::schema {

namespace {

void parse_positive_seconds(util::ObjectReader& r, const char* key, double& out) {
  if (auto v = r.number(key, false)) {
    if (!(*v > 0.0)) r.fail(key, "must be > 0");
    else out = *v;
  }
}

ProcessSettings parse_process(const Json& doc, const std::string& path, std::vector<FieldError>& errors,
                              const ValidationContext& context) {
  ProcessSettings p;
  util::ObjectReader r(doc, path, errors);
  if (!r.ok()) return p;
  if (auto v = r.integer("rounds", true)) {
    if (*v < 1) r.fail("rounds", "must be >= 1");
    else p.rounds = static_cast<std::size_t>(*v);
  }
  if (auto v = r.integer("min_replies", true)) {
    if (*v < 1) {
      r.fail("min_replies", "must be >= 1");
    } else {
      p.min_replies = static_cast<std::size_t>(*v);
      if (context.n_participants && p.min_replies > *context.n_participants) {
        r.fail("min_replies", "exceeds the " + std::to_string(*context.n_participants) +
                                  " registered participants");
      }
    }
  }
  parse_positive_seconds(r, "ack_timeout_s", p.ack_timeout_s);
  parse_positive_seconds(r, "train_timeout_s", p.train_timeout_s);
  parse_positive_seconds(r, "eval_timeout_s", p.eval_timeout_s);
  if (auto v = r.boolean("pre_eval", false)) p.pre_eval = *v;
  if (auto v = r.boolean("post_eval", false)) p.post_eval = *v;
  if (auto v = r.boolean("allow_metrics_upload_default", false)) p.allow_metrics_upload_default = *v;
  if (auto v = r.integer("history_rounds", false)) {
    if (*v < 0) r.fail("history_rounds", "must be >= 0");
    else p.history_rounds = static_cast<std::size_t>(*v);
  }
  if (const Json* s = r.field("scheduler", false)) {
    p.scheduler = algo::parse_scheduler_config(*s, r.path_of("scheduler"), errors);
    if (p.scheduler.enabled && !p.post_eval) {
      r.fail("post_eval", "must be true when the scheduler is enabled");
    }
  }
  r.finish();
  return p;
}

ExperimentSpec parse_into(const Json& doc, const ValidationContext& context,
                          std::vector<FieldError>& errors) {
  ExperimentSpec spec;
  util::ObjectReader top(doc, "", errors);
  if (!top.ok()) return spec;
  if (auto id = top.string("experiment_id", context.require_experiment_id)) {
    if (id->empty() || id->size() > 128 || *id == "." || *id == ".." ||
        id->find_first_not_of("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_.") !=
            std::string::npos) {
      top.fail("experiment_id", "must be 1-128 characters from [A-Za-z0-9._-]");
    }
    spec.experiment_id = *id;
  }
  if (const Json* m = top.field("model_config", true)) {
    spec.model_config = model::parse_model_config(*m, "model_config", errors);
  }
  if (const Json* s = top.field("settings", true)) {
    util::ObjectReader settings(*s, "settings", errors);
    if (settings.ok()) {
      if (const Json* p = settings.field("process", true)) {
        spec.process = parse_process(*p, settings.path_of("process"), errors, context);
      }
      if (const Json* a = settings.field("algorithm", true)) {
        spec.algorithm = algo::parse_algorithm_params(*a, settings.path_of("algorithm"), errors);
      }
      if (const Json* t = settings.field("training", true)) {
        spec.training = model::parse_training_settings(*t, settings.path_of("training"), errors);
      }
      settings.finish();
    }
  }
  top.finish();
  return spec;
}

}  // namespace

ValidationReport validate_experiment(const Json& doc, const ValidationContext& context) {
  ValidationReport report;
  parse_into(doc, context, report.errors);
  report.valid = report.errors.empty();
  return report;
}

ExperimentSpec parse_experiment(const Json& doc, const ValidationContext& context) {
  std::vector<FieldError> errors;
  ExperimentSpec spec = parse_into(doc, context, errors);
  if (!errors.empty()) throw util::ValidationError(std::move(errors));
  return spec;
}

Json to_json(const ExperimentSpec& spec) {
  const ProcessSettings& p = spec.process;
  Json doc{{"model_config", model::to_json(spec.model_config)},
           {"settings",
            {{"process",
              {{"rounds", p.rounds},
               {"min_replies", p.min_replies},
               {"ack_timeout_s", p.ack_timeout_s},
               {"train_timeout_s", p.train_timeout_s},
               {"eval_timeout_s", p.eval_timeout_s},
               {"pre_eval", p.pre_eval},
               {"post_eval", p.post_eval},
               {"allow_metrics_upload_default", p.allow_metrics_upload_default},
               {"history_rounds", p.history_rounds},
               {"scheduler", algo::to_json(p.scheduler)}}},
             {"algorithm", algo::to_json(spec.algorithm)},
             {"training", model::to_json(spec.training)}}}};
  if (!spec.experiment_id.empty()) doc["experiment_id"] = spec.experiment_id;
  return doc;
}

Json to_json(const ValidationReport& report) {
  return {{"valid", report.valid}, {"errors", util::to_json(report.errors)}};
}

}  // namespace fedplat::schema
