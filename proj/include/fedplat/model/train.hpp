#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <stop_token>
#include <vector>

#include "fedplat/model/config.hpp"
#include "fedplat/model/dataset.hpp"
#include "fedplat/model/mlp.hpp"

namespace fedplat::model {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class StopReason { completed, deadline, cancelled, stopped_by_callback };

struct TrainResult {
  ModelWeights weights;
  std::vector<double> epoch_losses;  // one entry per completed epoch
  std::size_t completed_epochs = 0;
  std::size_t steps = 0;  // optimizer steps taken
  StopReason stop_reason = StopReason::completed;
};

struct TrainControl {
  std::optional<std::chrono::steady_clock::time_point> deadline;
  std::stop_token stop;  // checked between batches like the deadline
  // Called after every epoch with the current weights. May change the
  // learning rate (optimizer state is kept); returning false ends training.
  std::function<bool(std::size_t epoch, const ModelWeights& weights, double& learning_rate)> on_epoch_end;
};

// Mini-batch training for settings.epochs passes, shuffled per epoch from
// settings.rng_seed. Optimizer state starts fresh on every call.
// Throws TrainingError on an empty dataset or a non-finite loss.
TrainResult train_local(const ModelConfig& config, const ModelWeights& weights,
                        const Dataset& data, const TrainingSettings& settings,
                        const GradientModifier* modifier, const TrainControl& control = {});

}  // namespace fedplat::model
