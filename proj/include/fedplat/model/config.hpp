#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedplat/util/json_reader.hpp"

namespace fedplat::model {

using util::FieldError;
using util::Json;

enum class Activation { tanh, relu, sigmoid, linear };

std::string_view activation_name(Activation a);

struct LayerSpec {
  std::size_t units = 1;
  Activation activation = Activation::linear;
  double dropout_rate = 0.0;
};

enum class SeedPolicy { derived, explicit_seed };

// Dense network: input -> layers[0] -> ... -> layers.back() -> sigmoid.
// For binary classification the last layer has a single unit.
struct ModelConfig {
  std::size_t input_dim = 1;
  std::vector<LayerSpec> layers;
  SeedPolicy seed_policy = SeedPolicy::derived;
  std::uint64_t seed = 0;  // used when seed_policy is explicit_seed
};

Json to_json(const ModelConfig& config);
// Collects problems into `errors`; the returned value is meaningful only when
// no errors were added.
ModelConfig parse_model_config(const Json& doc, const std::string& path,
                               std::vector<FieldError>& errors);
// Strict variant; throws util::ValidationError.
ModelConfig model_config_from_json(const Json& doc);

// Fully connected preset: `hidden` layers of `units` with the given
// activation/dropout, then one linear output unit.
ModelConfig make_mlp_config(std::size_t input_dim, std::size_t hidden, std::size_t units,
                            Activation activation, double dropout_rate);

enum class Optimizer { adam, sgd };

struct TrainingSettings {
  std::size_t batch_size = 32;
  std::size_t epochs = 1;
  Optimizer optimizer = Optimizer::adam;
  double learning_rate = 0.001;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-7;
  double class_threshold = 0.5;
  std::uint64_t rng_seed = 0;
};

Json to_json(const TrainingSettings& settings);
TrainingSettings parse_training_settings(const Json& doc, const std::string& path,
                                         std::vector<FieldError>& errors);
TrainingSettings training_settings_from_json(const Json& doc);

}  // namespace fedplat::model
