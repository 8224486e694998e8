#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "fedplat/util/json_reader.hpp"

namespace fedplat::algo {

enum class Direction { minimize, maximize };

struct SchedulerConfig {
  bool enabled = false;
  std::size_t plateau_patience = 16;
  double reduce_factor = 0.5;
  double min_delta = 1e-4;
  std::size_t stop_patience = 48;
  Direction direction = Direction::minimize;
};

util::Json to_json(const SchedulerConfig& config);
SchedulerConfig parse_scheduler_config(const util::Json& doc, const std::string& path,
                                       std::vector<util::FieldError>& errors);

// Plateau learning-rate reduction and early stopping driven by one monitored
// value per round (or epoch). The two controllers track their best value
// independently.
struct SchedulerState {
  double current_lr = 0.0;
  std::size_t plateau_patience = 16;
  std::size_t plateau_counter = 0;
  double plateau_best = std::numeric_limits<double>::quiet_NaN();
  double reduce_factor = 0.5;
  double min_delta = 1e-4;
  std::size_t stop_patience = 48;
  std::size_t stop_counter = 0;
  double best_metric = std::numeric_limits<double>::quiet_NaN();
  std::size_t best_round = 0;
  std::size_t observed = 0;  // calls to early_stop_step so far

  static SchedulerState initial(const SchedulerConfig& config, double learning_rate);
};

struct PlateauOutcome {
  bool lr_changed = false;
  SchedulerState state;
};

struct EarlyStopOutcome {
  bool stop = false;
  bool improved = false;
  SchedulerState state;
};

PlateauOutcome plateau_step(const SchedulerState& state, double monitored, Direction direction);

// `round` labels the observation; best_round records it on improvement.
EarlyStopOutcome early_stop_step(const SchedulerState& state, double monitored,
                                 Direction direction, std::size_t round);

}  // namespace fedplat::algo
