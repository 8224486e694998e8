#include "fedplat/model/config.hpp"

namespace fedplat::model {

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::tanh:
      return "tanh";
    case Activation::relu:
      return "relu";
    case Activation::sigmoid:
      return "sigmoid";
    case Activation::linear:
      return "linear";
  }
  return "linear";
}

Json to_json(const ModelConfig& config) {
  Json layers = Json::array();
  for (const auto& l : config.layers) {
    layers.push_back({{"units", l.units},
                      {"activation", activation_name(l.activation)},
                      {"dropout_rate", l.dropout_rate}});
  }
  Json seed_policy = config.seed_policy == SeedPolicy::explicit_seed
                         ? Json{{"kind", "explicit"}, {"seed", config.seed}}
                         : Json{{"kind", "derived"}};
  return {{"input_dim", config.input_dim},
          {"layers", layers},
          {"output_activation", "sigmoid"},
          {"seed_policy", seed_policy}};
}

ModelConfig parse_model_config(const Json& doc, const std::string& path,
                               std::vector<FieldError>& errors) {
  ModelConfig config;
  util::ObjectReader r(doc, path, errors);
  if (!r.ok()) return config;

  if (auto v = r.integer("input_dim", true)) {
    if (*v < 1) r.fail("input_dim", "must be >= 1");
    else config.input_dim = static_cast<std::size_t>(*v);
  }

  if (const Json* layers = r.field("layers", true)) {
    const std::string layers_path = r.path_of("layers");
    if (!layers->is_array()) {
      errors.push_back({layers_path, "expected an array"});
    } else if (layers->empty()) {
      errors.push_back({layers_path, "at least one layer is required"});
    } else {
      for (std::size_t i = 0; i < layers->size(); ++i) {
        util::ObjectReader lr((*layers)[i], util::join_path(layers_path, std::to_string(i)),
                              errors);
        LayerSpec spec;
        if (auto u = lr.integer("units", true)) {
          if (*u < 1) lr.fail("units", "must be >= 1");
          else spec.units = static_cast<std::size_t>(*u);
        }
        if (auto a = lr.choice<Activation>("activation", true,
                                           {{"tanh", Activation::tanh},
                                            {"relu", Activation::relu},
                                            {"sigmoid", Activation::sigmoid},
                                            {"linear", Activation::linear}})) {
          spec.activation = *a;
        }
        if (auto d = lr.number("dropout_rate", false)) {
          if (*d < 0.0 || *d >= 1.0) lr.fail("dropout_rate", "must be in [0, 1)");
          else spec.dropout_rate = *d;
        }
        lr.finish();
        config.layers.push_back(spec);
      }
      const std::string last = util::join_path(layers_path, std::to_string(layers->size() - 1));
      if (config.layers.size() == layers->size()) {
        if (config.layers.back().units != 1) {
          errors.push_back({util::join_path(last, "units"),
                            "output layer must have exactly one unit (binary classifier)"});
        }
        if (config.layers.back().dropout_rate != 0.0) {
          errors.push_back({util::join_path(last, "dropout_rate"),
                            "output layer cannot use dropout"});
        }
      }
    }
  }

  if (auto out = r.string("output_activation", false); out && *out != "sigmoid") {
    r.fail("output_activation", "only 'sigmoid' is supported");
  }

  if (const Json* seed = r.field("seed_policy", false)) {
    util::ObjectReader sr(*seed, r.path_of("seed_policy"), errors);
    auto kind = sr.choice<SeedPolicy>("kind", true,
                                      {{"derived", SeedPolicy::derived},
                                       {"explicit", SeedPolicy::explicit_seed}});
    if (kind) config.seed_policy = *kind;
    if (kind == SeedPolicy::explicit_seed) {
      if (auto s = sr.integer("seed", true)) {
        if (*s < 0) sr.fail("seed", "must be >= 0");
        else config.seed = static_cast<std::uint64_t>(*s);
      }
    } else if (sr.has("seed")) {
      sr.fail("seed", "only allowed with kind 'explicit'");
      sr.field("seed", false);
    }
    sr.finish();
  }
  r.finish();
  return config;
}

ModelConfig model_config_from_json(const Json& doc) {
  std::vector<FieldError> errors;
  ModelConfig config = parse_model_config(doc, "", errors);
  if (!errors.empty()) throw util::ValidationError(std::move(errors));
  return config;
}

ModelConfig make_mlp_config(std::size_t input_dim, std::size_t hidden, std::size_t units,
                            Activation activation, double dropout_rate) {
  ModelConfig config;
  config.input_dim = input_dim;
  for (std::size_t i = 0; i < hidden; ++i) {
    config.layers.push_back({units, activation, dropout_rate});
  }
  config.layers.push_back({1, Activation::linear, 0.0});
  return config;
}

Json to_json(const TrainingSettings& s) {
  return {{"batch_size", s.batch_size},
          {"epochs", s.epochs},
          {"loss", "binary_cross_entropy"},
          {"optimizer", s.optimizer == Optimizer::adam ? "adam" : "sgd"},
          {"learning_rate", s.learning_rate},
          {"adam_beta1", s.adam_beta1},
          {"adam_beta2", s.adam_beta2},
          {"adam_epsilon", s.adam_epsilon},
          {"class_threshold", s.class_threshold},
          {"rng_seed", s.rng_seed}};
}

TrainingSettings parse_training_settings(const Json& doc, const std::string& path,
                                         std::vector<FieldError>& errors) {
  TrainingSettings s;
  util::ObjectReader r(doc, path, errors);
  if (!r.ok()) return s;
  if (auto v = r.integer("batch_size", true)) {
    if (*v < 1) r.fail("batch_size", "must be >= 1");
    else s.batch_size = static_cast<std::size_t>(*v);
  }
  if (auto v = r.integer("epochs", true)) {
    if (*v < 1) r.fail("epochs", "must be >= 1");
    else s.epochs = static_cast<std::size_t>(*v);
  }
  if (auto loss = r.string("loss", false); loss && *loss != "binary_cross_entropy") {
    r.fail("loss", "only 'binary_cross_entropy' is supported");
  }
  if (auto o = r.choice<Optimizer>("optimizer", false,
                                   {{"adam", Optimizer::adam}, {"sgd", Optimizer::sgd}})) {
    s.optimizer = *o;
  }
  if (auto v = r.number("learning_rate", true)) {
    if (!(*v > 0.0)) r.fail("learning_rate", "must be > 0");
    else s.learning_rate = *v;
  }
  if (auto v = r.number("adam_beta1", false)) {
    if (*v < 0.0 || *v >= 1.0) r.fail("adam_beta1", "must be in [0, 1)");
    else s.adam_beta1 = *v;
  }
  if (auto v = r.number("adam_beta2", false)) {
    if (*v < 0.0 || *v >= 1.0) r.fail("adam_beta2", "must be in [0, 1)");
    else s.adam_beta2 = *v;
  }
  if (auto v = r.number("adam_epsilon", false)) {
    if (!(*v > 0.0)) r.fail("adam_epsilon", "must be > 0");
    else s.adam_epsilon = *v;
  }
  if (auto v = r.number("class_threshold", false)) {
    if (*v < 0.0 || *v > 1.0) r.fail("class_threshold", "must be in [0, 1]");
    else s.class_threshold = *v;
  }
  if (auto v = r.integer("rng_seed", false)) {
    if (*v < 0) r.fail("rng_seed", "must be >= 0");
    else s.rng_seed = static_cast<std::uint64_t>(*v);
  }
  r.finish();
  return s;
}

TrainingSettings training_settings_from_json(const Json& doc) {
  std::vector<FieldError> errors;
  TrainingSettings s = parse_training_settings(doc, "", errors);
  if (!errors.empty()) throw util::ValidationError(std::move(errors));
  return s;
}

}  // namespace fedplat::model
