#include "fedplat/model/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedplat/simd/kernels.hpp"

namespace fedplat::model {
namespace {

Matrix gather_rows(const Matrix& src, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), src.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto row = src.row(rows[i]);
    std::copy(row.begin(), row.end(), out.row(i).begin());
  }
  return out;
}

class OptimizerState {
 public:
  OptimizerState(const TrainingSettings& settings, const ModelWeights& shape)
      : settings_(settings) {
    if (settings.optimizer == model::Optimizer::adam) {
      m_ = shape.zeros_like();
      v_ = shape.zeros_like();
    }
  }

  void step(ModelWeights& weights, const ModelWeights& grads) {
    const auto& k = simd::kernels();
    ++t_;
    if (settings_.optimizer == model::Optimizer::sgd) {
      for (std::size_t b = 0; b < weights.size(); ++b) {
        k.axpy(-settings_.learning_rate, grads[b].values.data(), weights[b].values.data(),
               weights[b].values.size());
      }
      return;
    }
    const simd::AdamCoefficients c{
        settings_.learning_rate,
        settings_.adam_beta1,
        settings_.adam_beta2,
        settings_.adam_epsilon,
        1.0 - std::pow(settings_.adam_beta1, static_cast<double>(t_)),
        1.0 - std::pow(settings_.adam_beta2, static_cast<double>(t_)),
    };
    for (std::size_t b = 0; b < weights.size(); ++b) {
      k.adam_update(weights[b].values.data(), grads[b].values.data(), m_[b].values.data(),
                    v_[b].values.data(), weights[b].values.size(), c);
    }
  }

 private:
  const TrainingSettings& settings_;
  ModelWeights m_;
  ModelWeights v_;
  std::size_t t_ = 0;
};

}  // namespace

TrainResult train_local(const ModelConfig& config, const ModelWeights& weights,
                        const Dataset& data, const TrainingSettings& settings,
                        const GradientModifier* modifier, const TrainControl& control) {
  if (data.empty()) throw TrainingError("training dataset is empty");
  if (settings.batch_size == 0) throw TrainingError("batch_size must be >= 1");

  TrainResult result;
  result.weights = weights;
  if (settings.epochs == 0) return result;

  Rng rng(settings.rng_seed);
  TrainingSettings current = settings;
  OptimizerState optimizer(current, weights);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  auto interrupted = [&]() -> bool {
    if (control.stop.stop_requested()) {
      result.stop_reason = StopReason::cancelled;
      return true;
    }
    if (control.deadline && std::chrono::steady_clock::now() >= *control.deadline) {
      result.stop_reason = StopReason::deadline;
      return true;
    }
    return false;
  };

  for (std::size_t epoch = 0; epoch < settings.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double weighted_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += settings.batch_size) {
      if (interrupted()) return result;
      const std::size_t end = std::min(order.size(), start + settings.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      const Matrix batch = gather_rows(data.features, rows);
      std::vector<double> labels(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = data.labels[rows[i]];

      LossAndGrad lg = loss_and_grad(config, result.weights, batch, labels, modifier, rng);
      if (!std::isfinite(lg.loss)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch));
      }
      optimizer.step(result.weights, lg.grads);
      ++result.steps;
      weighted_loss += lg.loss * static_cast<double>(rows.size());
    }
    result.epoch_losses.push_back(weighted_loss / static_cast<double>(order.size()));
    ++result.completed_epochs;
    if (control.on_epoch_end && !control.on_epoch_end(epoch, result.weights, current.learning_rate)) {
      result.stop_reason = StopReason::stopped_by_callback;
      return result;
    }
  }
  return result;
}

}  // namespace fedplat::model
