#include "fedplat/algo/scheduler.hpp"

#include <cmath>

namespace fedplat::algo {
namespace {

bool improves(double candidate, double best, double min_delta, Direction direction) {
  if (std::isnan(best)) return true;
  return direction == Direction::minimize ? candidate < best - min_delta
                                          : candidate > best + min_delta;
}

}  // namespace

util::Json to_json(const SchedulerConfig& c) {
  return {{"enabled", c.enabled},
          {"plateau_patience", c.plateau_patience},
          {"reduce_factor", c.reduce_factor},
          {"min_delta", c.min_delta},
          {"early_stop_patience", c.stop_patience},
          {"direction", c.direction == Direction::minimize ? "minimize" : "maximize"}};
}

SchedulerConfig parse_scheduler_config(const util::Json& doc, const std::string& path,
                                       std::vector<util::FieldError>& errors) {
  SchedulerConfig c;
  util::ObjectReader r(doc, path, errors);
  if (!r.ok()) return c;
  if (auto v = r.boolean("enabled", false)) c.enabled = *v;
  if (auto v = r.integer("plateau_patience", false)) {
    if (*v < 1) r.fail("plateau_patience", "must be >= 1");
    else c.plateau_patience = static_cast<std::size_t>(*v);
  }
  if (auto v = r.number("reduce_factor", false)) {
    if (!(*v > 0.0 && *v < 1.0)) r.fail("reduce_factor", "must be in (0, 1)");
    else c.reduce_factor = *v;
  }
  if (auto v = r.number("min_delta", false)) {
    if (*v < 0.0) r.fail("min_delta", "must be >= 0");
    else c.min_delta = *v;
  }
  if (auto v = r.integer("early_stop_patience", false)) {
    if (*v < 1) r.fail("early_stop_patience", "must be >= 1");
    else c.stop_patience = static_cast<std::size_t>(*v);
  }
  if (auto d = r.choice<Direction>("direction", false,
                                   {{"minimize", Direction::minimize},
                                    {"maximize", Direction::maximize}})) {
    c.direction = *d;
  }
  r.finish();
  return c;
}

SchedulerState SchedulerState::initial(const SchedulerConfig& config, double learning_rate) {
  SchedulerState s;
  s.current_lr = learning_rate;
  s.plateau_patience = config.plateau_patience;
  s.reduce_factor = config.reduce_factor;
  s.min_delta = config.min_delta;
  s.stop_patience = config.stop_patience;
  return s;
}

PlateauOutcome plateau_step(const SchedulerState& state, double monitored, Direction direction) {
  PlateauOutcome out{false, state};
  SchedulerState& s = out.state;
  if (improves(monitored, s.plateau_best, s.min_delta, direction)) {
    s.plateau_best = monitored;
    s.plateau_counter = 0;
    return out;
  }
  if (++s.plateau_counter >= s.plateau_patience) {
    s.current_lr *= s.reduce_factor;
    s.plateau_counter = 0;
    out.lr_changed = true;
  }
  return out;
}

EarlyStopOutcome early_stop_step(const SchedulerState& state, double monitored,
                                 Direction direction, std::size_t round) {
  EarlyStopOutcome out{false, false, state};
  SchedulerState& s = out.state;
  ++s.observed;
  if (improves(monitored, s.best_metric, s.min_delta, direction)) {
    s.best_metric = monitored;
    s.best_round = round;
    s.stop_counter = 0;
    out.improved = true;
    return out;
  }
  if (++s.stop_counter >= s.stop_patience) out.stop = true;
  return out;
}

}  // namespace fedplat::algo
