#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fedplat/model/metrics.hpp"
#include "fedplat/model/mlp.hpp"
#include "fedplat/model/tensor.hpp"
#include "fedplat/util/json_reader.hpp"

namespace fedplat::algo {

using model::ModelWeights;

enum class AlgorithmKind { fedavg, fedprox, feddyn, scaffold };

std::string_view algorithm_name(AlgorithmKind kind);

struct AlgorithmParams {
  AlgorithmKind kind = AlgorithmKind::fedavg;
  double mu = 0.0;                 // FedProx proximal / FedDyn regularization
  double retained_fraction = 0.0;  // share of the previous global kept (FedAvg, FedProx)
  double server_step = 1.0;        // SCAFFOLD global step
  double local_lr = 0.0;           // SCAFFOLD control-variate step
};

util::Json to_json(const AlgorithmParams& params);
// FedProx and FedDyn need "mu" (FedDyn strictly positive); SCAFFOLD needs a
// positive "local_lr".
AlgorithmParams parse_algorithm_params(const util::Json& doc, const std::string& path,
                                       std::vector<util::FieldError>& errors);
AlgorithmParams algorithm_params_from_json(const util::Json& doc);

// Held by the parameter server across rounds.
struct ServerAggState {
  std::size_t round = 0;
  ModelWeights feddyn_h;    // zeros at round 0
  ModelWeights scaffold_c;  // zeros at round 0
  std::size_t n_clients_total = 0;

  static ServerAggState initial(const ModelWeights& global, std::size_t n_clients_total);
};

// Held by each client across the rounds of one experiment.
struct ClientAlgState {
  ModelWeights scaffold_c_i;  // empty means zeros
  ModelWeights feddyn_g_k;    // empty means zeros
};

struct ClientUpdate {
  std::string client_id;
  ModelWeights new_weights;
  std::size_t n_train_samples = 0;
  std::optional<ModelWeights> delta_c;  // SCAFFOLD only
  std::optional<model::EvalMetrics> post_eval;
  std::optional<model::EvalMetrics> pre_eval;
};

// Local-objective hook. `server_c` is the SCAFFOLD server control variate the
// client received with the job; other algorithms ignore it.
//   fedavg:   g
//   fedprox:  g + mu (w - global)
//   scaffold: g - c_i + c
//   feddyn:   g - g_k + mu (w - global)
model::GradientModifier make_modifier(const AlgorithmParams& params, const ModelWeights& global,
                                      const ClientAlgState& state,
                                      const ModelWeights* server_c);

struct ClientFinalization {
  std::optional<ModelWeights> delta_c;
  ClientAlgState state;
};

// Post-training bookkeeping. `optimizer_steps` is the number of local steps
// actually taken; SCAFFOLD with zero steps is a training failure
// (std::invalid_argument).
ClientFinalization finalize_client_update(const AlgorithmParams& params,
                                          const ModelWeights& global,
                                          const ModelWeights& trained,
                                          const ClientAlgState& state,
                                          const ModelWeights* server_c,
                                          std::size_t optimizer_steps);

struct AggregateResult {
  ModelWeights global;
  ServerAggState state;
};

// New global model from the round's updates. Updates are combined in
// client_id order, so the result does not depend on arrival order.
// Throws model::StructureMismatch or std::invalid_argument.
AggregateResult aggregate(const AlgorithmParams& params, const ModelWeights& prev_global,
                          const std::vector<ClientUpdate>& updates,
                          const ServerAggState& state);

// sum(v_i * n_i) / sum(n_i). Throws std::invalid_argument on zero total weight.
double weighted_metric_mean(const std::vector<double>& values,
                            const std::vector<std::size_t>& weights);

}  // namespace fedplat::algo
