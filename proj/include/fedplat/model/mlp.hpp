#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "fedplat/model/config.hpp"
#include "fedplat/model/tensor.hpp"

namespace fedplat::model {

using Rng = std::mt19937_64;

enum class Mode { train, infer };

// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] inside the loss.
inline constexpr double kProbClamp = 1e-7;

// Glorot-uniform kernels, zero biases. Blocks are "dense_<i>/kernel" with
// shape [fan_in, units] followed by "dense_<i>/bias" with shape [units].
// Throws std::invalid_argument on non-positive dimensions.
ModelWeights build_model(const ModelConfig& config, std::uint64_t seed);

inline double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

// Checks that `weights` has exactly the blocks build_model would produce.
void require_compatible(const ModelConfig& config, const ModelWeights& weights);

// Sigmoid outputs, one per row. Train mode applies inverted dropout with
// masks drawn from `rng`; infer mode ignores `rng`.
std::vector<double> forward(const ModelConfig& config, const ModelWeights& weights,
                            const Matrix& batch, Mode mode, Rng& rng);

// Additive gradient transform applied per block after backpropagation:
//   g += proximal * (w - anchor) + offset
// Zero proximal coefficient and absent offset leave g bit-for-bit unchanged.
struct GradientModifier {
  double proximal = 0.0;
  std::optional<ModelWeights> anchor;
  std::optional<ModelWeights> offset;

  bool is_identity() const { return proximal == 0.0 && !offset; }
  void apply(const ModelWeights& weights, ModelWeights& grads) const;
};

struct LossAndGrad {
  double loss = 0.0;  // mean binary cross-entropy over the batch
  ModelWeights grads;
};

// Forward in train mode, then backpropagation of the mean loss.
LossAndGrad loss_and_grad(const ModelConfig& config, const ModelWeights& weights,
                          const Matrix& batch, std::span<const double> labels,
                          const GradientModifier* modifier, Rng& rng);

double binary_cross_entropy(std::span<const double> probabilities,
                            std::span<const double> labels);

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace fedplat::model
