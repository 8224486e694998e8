#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace fixtures {

// A complete, valid experiment document for a small FedAvg run.
inline nlohmann::json experiment_doc(std::size_t input_dim = 4, std::size_t rounds = 3,
                                     std::size_t min_replies = 3) {
  return {
      {"model_config",
       {{"input_dim", input_dim},
        {"layers",
         {{{"units", 4}, {"activation", "tanh"}, {"dropout_rate", 0.0}},
          {{"units", 1}, {"activation", "linear"}, {"dropout_rate", 0.0}}}},
        {"seed_policy", {{"kind", "explicit"}, {"seed", 7}}}}},
      {"settings",
       {{"process",
         {{"rounds", rounds},
          {"min_replies", min_replies},
          {"ack_timeout_s", 2.0},
          {"train_timeout_s", 5.0},
          {"eval_timeout_s", 2.0},
          {"pre_eval", false},
          {"post_eval", true}}},
        {"algorithm", {{"kind", "fedavg"}}},
        {"training",
         {{"batch_size", 16}, {"epochs", 1}, {"optimizer", "adam"}, {"learning_rate", 0.01}, {"rng_seed", 5}}}}}};
}

}  // namespace fixtures
