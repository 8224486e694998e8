#include "fedplat/model/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fedplat/simd/kernels.hpp"

namespace fedplat::model {
namespace {

std::string kernel_name(std::size_t layer) { return "dense_" + std::to_string(layer) + "/kernel"; }
std::string bias_name(std::size_t layer) { return "dense_" + std::to_string(layer) + "/bias"; }

void check_dims(const ModelConfig& config) {
  if (config.input_dim == 0) throw std::invalid_argument("input_dim must be positive");
  if (config.layers.empty()) throw std::invalid_argument("model needs at least one layer");
  for (const auto& layer : config.layers) {
    if (layer.units == 0) throw std::invalid_argument("layer units must be positive");
    if (layer.dropout_rate < 0.0 || layer.dropout_rate >= 1.0) {
      throw std::invalid_argument("dropout_rate must be in [0, 1)");
    }
  }
}

double activate(Activation a, double z) {
  switch (a) {
    case Activation::tanh:
      return std::tanh(z);
    case Activation::relu:
      return z > 0.0 ? z : 0.0;
    case Activation::sigmoid:
      return sigmoid(z);
    case Activation::linear:
      return z;
  }
  return z;
}

// Derivative expressed through the pre-activation z and activation h.
double activation_grad(Activation a, double z, double h) {
  switch (a) {
    case Activation::tanh:
      return 1.0 - h * h;
    case Activation::relu:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid:
      return h * (1.0 - h);
    case Activation::linear:
      return 1.0;
  }
  return 1.0;
}

struct LayerCache {
  Matrix pre;   // z
  Matrix act;   // h = act(z)
  Matrix out;   // after dropout (input to next layer)
  std::vector<double> mask;  // dropout scale per element (0 or 1/(1-p)); empty if none
};

// Runs all layers, keeping what backprop needs when `cache` is non-null.
std::vector<double> run_forward(const ModelConfig& config, const ModelWeights& weights,
                                const Matrix& batch, Mode mode, Rng& rng,
                                std::vector<LayerCache>* cache) {
  if (batch.cols != config.input_dim) {
    throw std::invalid_argument("batch has " + std::to_string(batch.cols) +
                                " columns, model expects " +
                                std::to_string(config.input_dim));
  }
  if (config.layers.back().units != 1) {
    throw std::invalid_argument("output layer must have a single unit");
  }
  require_compatible(config, weights);
  const auto& k = simd::kernels();

  Matrix current = batch;
  for (std::size_t l = 0; l < config.layers.size(); ++l) {
    const LayerSpec& spec = config.layers[l];
    const TensorBlock& kernel = weights[2 * l];
    const TensorBlock& bias = weights[2 * l + 1];
    const std::size_t units = spec.units;

    Matrix pre(batch.rows, units);
    for (std::size_t r = 0; r < batch.rows; ++r) {
      double* z = pre.data.data() + r * units;
      std::copy(bias.values.begin(), bias.values.end(), z);
      const auto in = current.row(r);
      for (std::size_t i = 0; i < in.size(); ++i) {
        if (in[i] == 0.0) continue;
        k.axpy(in[i], kernel.values.data() + i * units, z, units);
      }
    }

    Matrix act(batch.rows, units);
    for (std::size_t i = 0; i < pre.data.size(); ++i) {
      act.data[i] = activate(spec.activation, pre.data[i]);
    }

    Matrix out = act;
    std::vector<double> mask;
    if (mode == Mode::train && spec.dropout_rate > 0.0) {
      const double keep_scale = 1.0 / (1.0 - spec.dropout_rate);
      std::bernoulli_distribution drop(spec.dropout_rate);
      mask.resize(out.data.size());
      for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = drop(rng) ? 0.0 : keep_scale;
        out.data[i] *= mask[i];
      }
    }

    if (cache) cache->push_back({std::move(pre), std::move(act), out, std::move(mask)});
    current = std::move(out);
  }

  std::vector<double> probs(batch.rows);
  for (std::size_t r = 0; r < batch.rows; ++r) probs[r] = sigmoid(current.data[r]);
  return probs;
}

}  // namespace

ModelWeights build_model(const ModelConfig& config, std::uint64_t seed) {
  check_dims(config);
  Rng rng(seed);
  std::vector<TensorBlock> blocks;
  std::size_t fan_in = config.input_dim;
  for (std::size_t l = 0; l < config.layers.size(); ++l) {
    const std::size_t fan_out = config.layers[l].units;
    const double limit = glorot_limit(fan_in, fan_out);
    std::uniform_real_distribution<double> dist(-limit, limit);
    TensorBlock kernel{kernel_name(l), {fan_in, fan_out}, DType::f64, {}};
    kernel.values.resize(fan_in * fan_out);
    for (double& v : kernel.values) v = dist(rng);
    blocks.push_back(std::move(kernel));
    blocks.push_back({bias_name(l), {fan_out}, DType::f64, std::vector<double>(fan_out, 0.0)});
    fan_in = fan_out;
  }
  return ModelWeights(std::move(blocks));
}

void require_compatible(const ModelConfig& config, const ModelWeights& weights) {
  if (weights.size() != 2 * config.layers.size()) {
    throw StructureMismatch("weights have " + std::to_string(weights.size()) +
                            " blocks, model config needs " +
                            std::to_string(2 * config.layers.size()));
  }
  std::size_t fan_in = config.input_dim;
  for (std::size_t l = 0; l < config.layers.size(); ++l) {
    const std::size_t units = config.layers[l].units;
    const TensorBlock& kernel = weights[2 * l];
    const TensorBlock& bias = weights[2 * l + 1];
    if (kernel.name != kernel_name(l) ||
        kernel.shape != std::vector<std::size_t>{fan_in, units} || bias.name != bias_name(l) ||
        bias.shape != std::vector<std::size_t>{units}) {
      throw StructureMismatch("weights do not match model config at layer " +
                              std::to_string(l));
    }
    fan_in = units;
  }
}

std::vector<double> forward(const ModelConfig& config, const ModelWeights& weights,
                            const Matrix& batch, Mode mode, Rng& rng) {
  return run_forward(config, weights, batch, mode, rng, nullptr);
}

void GradientModifier::apply(const ModelWeights& weights, ModelWeights& grads) const {
  if (proximal != 0.0) {
    if (!anchor) throw std::invalid_argument("proximal modifier without anchor");
    weights.require_same_structure(*anchor, "modifier anchor");
    for (std::size_t b = 0; b < grads.size(); ++b) {
      simd::axpy_diff(proximal, weights[b].values, (*anchor)[b].values, grads[b].values);
    }
  }
  if (offset) {
    weights.require_same_structure(*offset, "modifier offset");
    for (std::size_t b = 0; b < grads.size(); ++b) {
      simd::axpy(1.0, (*offset)[b].values, grads[b].values);
    }
  }
}

double binary_cross_entropy(std::span<const double> probabilities,
                            std::span<const double> labels) {
  if (probabilities.size() != labels.size()) {
    throw std::invalid_argument("predictions and labels differ in length");
  }
  if (probabilities.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double p = std::clamp(probabilities[i], kProbClamp, 1.0 - kProbClamp);
    total += labels[i] > 0.5 ? -std::log(p) : -std::log(1.0 - p);
  }
  return total / static_cast<double>(probabilities.size());
}

LossAndGrad loss_and_grad(const ModelConfig& config, const ModelWeights& weights,
                          const Matrix& batch, std::span<const double> labels,
                          const GradientModifier* modifier, Rng& rng) {
  if (labels.size() != batch.rows) {
    throw std::invalid_argument("batch and labels are not aligned");
  }
  if (batch.rows == 0) throw std::invalid_argument("empty batch");
  std::vector<LayerCache> cache;
  cache.reserve(config.layers.size());
  const std::vector<double> probs = run_forward(config, weights, batch, Mode::train, rng, &cache);

  LossAndGrad result;
  result.loss = binary_cross_entropy(probs, labels);
  result.grads = weights.zeros_like();

  const auto& k = simd::kernels();
  const double inv_n = 1.0 / static_cast<double>(batch.rows);

  // d loss / d (last layer output), zero where the probability clamp is active.
  Matrix delta(batch.rows, 1);
  for (std::size_t r = 0; r < batch.rows; ++r) {
    const double p = probs[r];
    const bool clamped = p < kProbClamp || p > 1.0 - kProbClamp;
    delta.data[r] = clamped ? 0.0 : (p - labels[r]) * inv_n;
  }

  for (std::size_t l = config.layers.size(); l-- > 0;) {
    const LayerSpec& spec = config.layers[l];
    const LayerCache& c = cache[l];
    const std::size_t units = spec.units;

    // Through dropout and the activation: delta becomes d loss / d z.
    for (std::size_t i = 0; i < delta.data.size(); ++i) {
      double d = delta.data[i];
      if (!c.mask.empty()) d *= c.mask[i];
      delta.data[i] = d * activation_grad(spec.activation, c.pre.data[i], c.act.data[i]);
    }

    const Matrix& input = l == 0 ? batch : cache[l - 1].out;
    TensorBlock& d_kernel = result.grads[2 * l];
    TensorBlock& d_bias = result.grads[2 * l + 1];
    for (std::size_t r = 0; r < batch.rows; ++r) {
      const double* dz = delta.data.data() + r * units;
      k.axpy(1.0, dz, d_bias.values.data(), units);
      const auto in = input.row(r);
      for (std::size_t i = 0; i < in.size(); ++i) {
        if (in[i] == 0.0) continue;
        k.axpy(in[i], dz, d_kernel.values.data() + i * units, units);
      }
    }

    if (l == 0) break;
    const TensorBlock& kernel = weights[2 * l];
    const std::size_t fan_in = input.cols;
    Matrix prev(batch.rows, fan_in);
    for (std::size_t r = 0; r < batch.rows; ++r) {
      const double* dz = delta.data.data() + r * units;
      for (std::size_t i = 0; i < fan_in; ++i) {
        prev.data[r * fan_in + i] = k.dot(kernel.values.data() + i * units, dz, units);
      }
    }
    delta = std::move(prev);
  }

  if (modifier && !modifier->is_identity()) modifier->apply(weights, result.grads);
  return result;
}

}  // namespace fedplat::model
