#include "fedplat/algo/algorithms.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "fedplat/simd/kernels.hpp"

namespace fedplat::algo {
namespace {

const ModelWeights& or_zeros(const ModelWeights& maybe_empty, const ModelWeights& shape,
                             ModelWeights& scratch) {
  if (!maybe_empty.empty()) return maybe_empty;
  scratch = shape.zeros_like();
  return scratch;
}

std::vector<const ClientUpdate*> sorted_updates(const std::vector<ClientUpdate>& updates) {
  std::vector<const ClientUpdate*> out;
  out.reserve(updates.size());
  for (const auto& u : updates) out.push_back(&u);
  std::stable_sort(out.begin(), out.end(), [](const ClientUpdate* a, const ClientUpdate* b) {
    return a->client_id < b->client_id;
  });
  return out;
}

// out = sum_i coef_i * models_i
ModelWeights linear_combination(const ModelWeights& shape,
                                 const std::vector<const ModelWeights*>& models,
                                 const std::vector<double>& coefs) {
  ModelWeights out = shape.zeros_like();
  for (std::size_t i = 0; i < models.size(); ++i) {
    for (std::size_t b = 0; b < out.size(); ++b) {
      simd::axpy(coefs[i], (*models[i])[b].values, out[b].values);
    }
  }
  return out;
}

}  // namespace

std::string_view algorithm_name(AlgorithmKind kind) {
  switch (kind) {
    case AlgorithmKind::fedavg:
      return "fedavg";
    case AlgorithmKind::fedprox:
      return "fedprox";
    case AlgorithmKind::feddyn:
      return "feddyn";
    case AlgorithmKind::scaffold:
      return "scaffold";
  }
  return "fedavg";
}

util::Json to_json(const AlgorithmParams& p) {
  util::Json doc{{"kind", algorithm_name(p.kind)},
                 {"retained_fraction", p.retained_fraction},
                 {"server_step", p.server_step}};
  if (p.kind == AlgorithmKind::fedprox || p.kind == AlgorithmKind::feddyn) doc["mu"] = p.mu;
  if (p.kind == AlgorithmKind::scaffold) doc["local_lr"] = p.local_lr;
  return doc;
}

AlgorithmParams parse_algorithm_params(const util::Json& doc, const std::string& path,
                                       std::vector<util::FieldError>& errors) {
  AlgorithmParams p;
  util::ObjectReader r(doc, path, errors);
  if (!r.ok()) return p;
  const auto kind = r.choice<AlgorithmKind>("kind", true,
                                            {{"fedavg", AlgorithmKind::fedavg},
                                             {"fedprox", AlgorithmKind::fedprox},
                                             {"feddyn", AlgorithmKind::feddyn},
                                             {"scaffold", AlgorithmKind::scaffold}});
  if (kind) p.kind = *kind;

  const bool needs_mu = kind == AlgorithmKind::fedprox || kind == AlgorithmKind::feddyn;
  if (auto mu = r.number("mu", needs_mu)) {
    if (kind == AlgorithmKind::feddyn && !(*mu > 0.0)) r.fail("mu", "must be > 0 for feddyn");
    else if (*mu < 0.0) r.fail("mu", "must be >= 0");
    else p.mu = *mu;
  }
  if (auto rho = r.number("retained_fraction", false)) {
    if (*rho < 0.0 || *rho >= 1.0) r.fail("retained_fraction", "must be in [0, 1)");
    else p.retained_fraction = *rho;
  }
  if (auto step = r.number("server_step", false)) {
    if (!(*step > 0.0)) r.fail("server_step", "must be > 0");
    else p.server_step = *step;
  }
  if (auto lr = r.number("local_lr", kind == AlgorithmKind::scaffold)) {
    if (!(*lr > 0.0)) r.fail("local_lr", "must be > 0");
    else p.local_lr = *lr;
  }
  r.finish();
  return p;
}

AlgorithmParams algorithm_params_from_json(const util::Json& doc) {
  std::vector<util::FieldError> errors;
  AlgorithmParams p = parse_algorithm_params(doc, "", errors);
  if (!errors.empty()) throw util::ValidationError(std::move(errors));
  return p;
}

ServerAggState ServerAggState::initial(const ModelWeights& global, std::size_t n_clients_total) {
  ServerAggState s;
  s.feddyn_h = global.zeros_like();
  s.scaffold_c = global.zeros_like();
  s.n_clients_total = n_clients_total;
  return s;
}

model::GradientModifier make_modifier(const AlgorithmParams& params, const ModelWeights& global,
                                      const ClientAlgState& state,
                                      const ModelWeights* server_c) {
  model::GradientModifier mod;
  ModelWeights scratch;
  switch (params.kind) {
    case AlgorithmKind::fedavg:
      break;
    case AlgorithmKind::fedprox:
      if (params.mu != 0.0) {
        mod.proximal = params.mu;
        mod.anchor = global;
      }
      break;
    case AlgorithmKind::scaffold: {
      const ModelWeights& c_i = or_zeros(state.scaffold_c_i, global, scratch);
      global.require_same_structure(c_i, "scaffold client control variate");
      ModelWeights offset = global.zeros_like();
      if (server_c && !server_c->empty()) {
        global.require_same_structure(*server_c, "scaffold server control variate");
        for (std::size_t b = 0; b < offset.size(); ++b) {
          simd::axpy_diff(1.0, (*server_c)[b].values, c_i[b].values, offset[b].values);
        }
      } else {
        for (std::size_t b = 0; b < offset.size(); ++b) {
          simd::axpy(-1.0, c_i[b].values, offset[b].values);
        }
      }
      mod.offset = std::move(offset);
      break;
    }
    case AlgorithmKind::feddyn: {
      mod.proximal = params.mu;
      mod.anchor = global;
      if (!state.feddyn_g_k.empty()) {
        global.require_same_structure(state.feddyn_g_k, "feddyn gradient state");
        ModelWeights offset = global.zeros_like();
        for (std::size_t b = 0; b < offset.size(); ++b) {
          simd::axpy(-1.0, state.feddyn_g_k[b].values, offset[b].values);
        }
        mod.offset = std::move(offset);
      }
      break;
    }
  }
  return mod;
}

ClientFinalization finalize_client_update(const AlgorithmParams& params,
                                          const ModelWeights& global,
                                          const ModelWeights& trained,
                                          const ClientAlgState& state,
                                          const ModelWeights* server_c,
                                          std::size_t optimizer_steps) {
  global.require_same_structure(trained, "trained model");
  ClientFinalization out;
  out.state = state;
  ModelWeights scratch;
  switch (params.kind) {
    case AlgorithmKind::fedavg:
    case AlgorithmKind::fedprox:
      break;
    case AlgorithmKind::scaffold: {
      if (optimizer_steps == 0) {
        throw std::invalid_argument("scaffold control variate needs at least one local step");
      }
      if (!(params.local_lr > 0.0)) throw std::invalid_argument("scaffold needs local_lr > 0");
      const ModelWeights& c_i = or_zeros(state.scaffold_c_i, global, scratch);
      const double inv = 1.0 / (static_cast<double>(optimizer_steps) * params.local_lr);
      // c_i+ = c_i - c + (global - trained) / (K * lr)
      ModelWeights c_plus = c_i;
      for (std::size_t b = 0; b < c_plus.size(); ++b) {
        if (server_c && !server_c->empty()) {
          simd::axpy(-1.0, (*server_c)[b].values, c_plus[b].values);
        }
        simd::axpy_diff(inv, global[b].values, trained[b].values, c_plus[b].values);
      }
      ModelWeights delta = c_plus;
      for (std::size_t b = 0; b < delta.size(); ++b) {
        simd::axpy(-1.0, c_i[b].values, delta[b].values);
      }
      out.delta_c = std::move(delta);
      out.state.scaffold_c_i = std::move(c_plus);
      break;
    }
    case AlgorithmKind::feddyn: {
      // g_k <- g_k - mu (trained - global)
      ModelWeights g_k = or_zeros(state.feddyn_g_k, global, scratch);
      for (std::size_t b = 0; b < g_k.size(); ++b) {
        simd::axpy_diff(-params.mu, trained[b].values, global[b].values, g_k[b].values);
      }
      out.state.feddyn_g_k = std::move(g_k);
      break;
    }
  }
  return out;
}

AggregateResult aggregate(const AlgorithmParams& params, const ModelWeights& prev_global,
                          const std::vector<ClientUpdate>& updates,
                          const ServerAggState& state) {
  if (updates.empty()) throw std::invalid_argument("aggregate needs at least one update");
  const auto ordered = sorted_updates(updates);
  for (const ClientUpdate* u : ordered) {
    prev_global.require_same_structure(u->new_weights, "update from " + u->client_id);
  }

  AggregateResult result;
  result.state = state;
  result.state.round = state.round + 1;
  std::vector<const ModelWeights*> models;
  for (const ClientUpdate* u : ordered) models.push_back(&u->new_weights);
  const double n_selected = static_cast<double>(ordered.size());

  switch (params.kind) {
    case AlgorithmKind::fedavg:
    case AlgorithmKind::fedprox: {
      std::size_t total = 0;
      for (const ClientUpdate* u : ordered) {
        if (u->n_train_samples == 0) {
          throw std::invalid_argument("update from " + u->client_id + " reports zero samples");
        }
        total += u->n_train_samples;
      }
      std::vector<double> coefs;
      for (const ClientUpdate* u : ordered) {
        coefs.push_back(static_cast<double>(u->n_train_samples) / static_cast<double>(total));
      }
      ModelWeights averaged = linear_combination(prev_global, models, coefs);
      const double rho = params.retained_fraction;
      if (rho != 0.0) {
        for (std::size_t b = 0; b < averaged.size(); ++b) {
          simd::axpby(rho, prev_global[b].values, 1.0 - rho, averaged[b].values);
        }
      }
      result.global = std::move(averaged);
      break;
    }
    case AlgorithmKind::scaffold: {
      if (state.n_clients_total == 0) throw std::invalid_argument("scaffold needs n_clients_total");
      // global + step * mean(theta_i - global)
      ModelWeights global = prev_global;
      const double coef = params.server_step / n_selected;
      for (const ClientUpdate* u : ordered) {
        for (std::size_t b = 0; b < global.size(); ++b) {
          simd::axpy_diff(coef, u->new_weights[b].values, prev_global[b].values,
                          global[b].values);
        }
      }
      // c <- c + (1/N) sum delta_c_i
      ModelWeights c = state.scaffold_c.empty() ? prev_global.zeros_like() : state.scaffold_c;
      const double inv_n = 1.0 / static_cast<double>(state.n_clients_total);
      for (const ClientUpdate* u : ordered) {
        if (!u->delta_c) {
          throw std::invalid_argument("scaffold update from " + u->client_id +
                                      " is missing delta_c");
        }
        prev_global.require_same_structure(*u->delta_c, "delta_c from " + u->client_id);
        for (std::size_t b = 0; b < c.size(); ++b) {
          simd::axpy(inv_n, (*u->delta_c)[b].values, c[b].values);
        }
      }
      result.global = std::move(global);
      result.state.scaffold_c = std::move(c);
      break;
    }
    case AlgorithmKind::feddyn: {
      if (state.n_clients_total == 0) throw std::invalid_argument("feddyn needs n_clients_total");
      if (!(params.mu > 0.0)) throw std::invalid_argument("feddyn needs mu > 0");
      // h <- h - mu (1/N) sum (theta_i - global)
      ModelWeights h = state.feddyn_h.empty() ? prev_global.zeros_like() : state.feddyn_h;
      const double coef = -params.mu / static_cast<double>(state.n_clients_total);
      for (const ClientUpdate* u : ordered) {
        for (std::size_t b = 0; b < h.size(); ++b) {
          simd::axpy_diff(coef, u->new_weights[b].values, prev_global[b].values, h[b].values);
        }
      }
      // global = mean(theta_i) - h / mu
      ModelWeights global = linear_combination(
          prev_global, models, std::vector<double>(models.size(), 1.0 / n_selected));
      for (std::size_t b = 0; b < global.size(); ++b) {
        simd::axpy(-1.0 / params.mu, h[b].values, global[b].values);
      }
      result.global = std::move(global);
      result.state.feddyn_h = std::move(h);
      break;
    }
  }
  return result;
}

double weighted_metric_mean(const std::vector<double>& values,
                            const std::vector<std::size_t>& weights) {
  if (values.size() != weights.size()) {
    throw std::invalid_argument("values and weights differ in length");
  }
  double total = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    total += static_cast<double>(weights[i]);
    acc += values[i] * static_cast<double>(weights[i]);
  }
  if (total <= 0.0) throw std::invalid_argument("weighted mean with zero total weight");
  return acc / total;
}

}  // namespace fedplat::algo
