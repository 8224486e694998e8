#pragma once

// Independent reference computations used by the unit and acceptance suites.
// Nothing here calls into the code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <vector>

#include "fedplat/model/config.hpp"
#include "fedplat/model/mlp.hpp"
#include "fedplat/model/tensor.hpp"

namespace oracles {

using fedplat::model::Matrix;
using fedplat::model::ModelConfig;
using fedplat::model::ModelWeights;

// Area under the PR step function by direct enumeration: for every distinct
// score t (descending), predict positive iff score >= t and count by scanning
// all samples.
inline double brute_force_average_precision(const std::vector<double>& scores,
                                            const std::vector<double>& labels) {
  std::set<double, std::greater<>> thresholds(scores.begin(), scores.end());
  std::size_t positives = 0;
  for (double y : labels) positives += y > 0.5 ? 1 : 0;
  double ap = 0.0;
  double prev_recall = 0.0;
  for (double t : thresholds) {
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= t) (labels[i] > 0.5 ? tp : fp)++;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

// Scalar forward pass written directly from the layer equations, with the
// clamped mean binary cross-entropy, evaluated in long double so central
// differences of it are not dominated by f64 roundoff. Dropout masks come
// from `mask_seed` in the same draw order as training so a fixed seed
// reproduces the same masks.
inline long double reference_loss(const ModelConfig& config, const ModelWeights& w,
                             const Matrix& x, const std::vector<double>& y,
                             std::uint64_t mask_seed) {
  using Real = long double;
  std::mt19937_64 rng(mask_seed);
  std::vector<std::vector<Real>> act(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) act[r].assign(x.row(r).begin(), x.row(r).end());
  for (std::size_t l = 0; l < config.layers.size(); ++l) {
    const auto& spec = config.layers[l];
    const auto& kernel = w[2 * l].values;
    const auto& bias = w[2 * l + 1].values;
    std::vector<std::vector<Real>> next(x.rows, std::vector<Real>(spec.units));
    for (std::size_t r = 0; r < x.rows; ++r) {
      for (std::size_t u = 0; u < spec.units; ++u) {
        Real z = bias[u];
        for (std::size_t i = 0; i < act[r].size(); ++i) z += act[r][i] * kernel[i * spec.units + u];
        Real h = z;
        switch (spec.activation) {
          case fedplat::model::Activation::tanh: h = std::tanh(z); break;
          case fedplat::model::Activation::relu: h = z > 0 ? z : 0; break;
          case fedplat::model::Activation::sigmoid: h = 1.0L / (1.0L + std::exp(-z)); break;
          case fedplat::model::Activation::linear: break;
        }
        next[r][u] = h;
      }
    }
    if (spec.dropout_rate > 0.0) {
      std::bernoulli_distribution drop(spec.dropout_rate);
      const Real keep = 1.0L / (1.0L - static_cast<Real>(spec.dropout_rate));
      for (std::size_t r = 0; r < x.rows; ++r)
        for (std::size_t u = 0; u < spec.units; ++u)
          next[r][u] = drop(rng) ? 0.0L : next[r][u] * keep;
    }
    act = std::move(next);
  }
  Real loss = 0.0L;
  for (std::size_t r = 0; r < x.rows; ++r) {
    Real p = 1.0L / (1.0L + std::exp(-act[r][0]));
    p = std::clamp(p, 1e-7L, 1.0L - 1e-7L);
    loss += y[r] > 0.5 ? -std::log(p) : -std::log(1.0L - p);
  }
  return loss / static_cast<Real>(x.rows);
}

// Central differences of `loss` with respect to every parameter.
inline ModelWeights finite_difference_gradient(const ModelWeights& w, double h,
                                               const std::function<long double(const ModelWeights&)>& loss) {
  ModelWeights grad = w.zeros_like();
  ModelWeights probe = w;
  for (std::size_t b = 0; b < w.size(); ++b) {
    for (std::size_t i = 0; i < w[b].values.size(); ++i) {
      const double original = probe[b].values[i];
      probe[b].values[i] = original + h;
      const long double up = loss(probe);
      probe[b].values[i] = original - h;
      const long double down = loss(probe);
      probe[b].values[i] = original;
      grad[b].values[i] = static_cast<double>((up - down) / (2.0L * h));
    }
  }
  return grad;
}

// Relative error with a floor on the denominator so coordinates whose true
// gradient is ~0 are compared on an absolute scale.
inline double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-7});
  return std::abs(analytic - numeric) / denom;
}

struct GradientCheckResult {
  int trials = 0;
  double max_relative_error = 0.0;
};

// Random small MLPs (<= 3 layers, <= 8 units), random batches and labels.
// `analytic` returns the implementation's gradient for (config, weights, x, y, mask_seed).
inline GradientCheckResult run_gradient_check(
    int trials, std::uint64_t seed,
    const std::function<ModelWeights(const ModelConfig&, const ModelWeights&, const Matrix&,
                                     const std::vector<double>&, std::uint64_t)>& analytic) {
  using fedplat::model::Activation;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> n_layers(1, 3);
  std::uniform_int_distribution<int> units(1, 8);
  std::uniform_int_distribution<int> act_pick(0, 3);
  std::uniform_int_distribution<int> batch_pick(1, 6);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  const Activation acts[] = {Activation::tanh, Activation::sigmoid, Activation::linear,
                             Activation::relu};

  GradientCheckResult result;
  for (int t = 0; t < trials; ++t) {
    ModelConfig config;
    config.input_dim = static_cast<std::size_t>(units(rng));
    const int hidden = n_layers(rng) - 1;
    for (int l = 0; l < hidden; ++l) {
      const double dropout = coin(rng) ? 0.0 : 0.3;
      config.layers.push_back({static_cast<std::size_t>(units(rng)), acts[act_pick(rng)], dropout});
    }
    config.layers.push_back({1, coin(rng) ? Activation::linear : Activation::tanh, 0.0});

    ModelWeights w = fedplat::model::build_model(config, rng());
    for (auto& block : w.blocks())
      for (double& v : block.values) v = 0.7 * normal(rng);

    const std::size_t rows = static_cast<std::size_t>(batch_pick(rng));
    Matrix x(rows, config.input_dim);
    for (double& v : x.data) v = normal(rng);
    std::vector<double> y(rows);
    for (double& v : y) v = coin(rng) ? 1.0 : 0.0;
    const std::uint64_t mask_seed = rng();

    const ModelWeights grad = analytic(config, w, x, y, mask_seed);
    const ModelWeights numeric = finite_difference_gradient(
        w, 1e-6, [&](const ModelWeights& p) { return reference_loss(config, p, x, y, mask_seed); });
    for (std::size_t b = 0; b < grad.size(); ++b)
      for (std::size_t i = 0; i < grad[b].values.size(); ++i)
        result.max_relative_error = std::max(
            result.max_relative_error, relative_error(grad[b].values[i], numeric[b].values[i]));
    ++result.trials;
  }
  return result;
}

}  // namespace oracles
