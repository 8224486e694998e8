#include <doctest.h>

#include <random>

#include "fedplat/algo/algorithms.hpp"
#include "fedplat/model/train.hpp"

using namespace fedplat;
using namespace fedplat::algo;
using model::DType;
using model::TensorBlock;

namespace {

ModelWeights vec(std::vector<double> v) {
  const std::size_t n = v.size();
  return ModelWeights({TensorBlock{"w", {n}, DType::f64, std::move(v)}});
}

ClientUpdate update(std::string id, std::vector<double> w, std::size_t n) {
  ClientUpdate u;
  u.client_id = std::move(id);
  u.new_weights = vec(std::move(w));
  u.n_train_samples = n;
  return u;
}

AlgorithmParams params(AlgorithmKind kind) {
  AlgorithmParams p;
  p.kind = kind;
  return p;
}

ModelWeights random_model(std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<TensorBlock> blocks{{"a", {2, 3}, DType::f64, {}}, {"b", {3}, DType::f64, {}}};
  for (auto& b : blocks) {
    b.values.resize(b.element_count());
    for (double& v : b.values) v = d(rng);
  }
  return ModelWeights(std::move(blocks));
}

}  // namespace

TEST_CASE("fedavg weights clients by sample count") {
  const auto r = aggregate(params(AlgorithmKind::fedavg), vec({0, 0}),
                           {update("a", {1, 2}, 1), update("b", {3, 4}, 3)},
                           ServerAggState::initial(vec({0, 0}), 2));
  CHECK(r.global[0].values == std::vector<double>{2.5, 3.5});
}

TEST_CASE("fedavg single client and retention extremes") {
  const ModelWeights prev = vec({10, -10});
  auto p = params(AlgorithmKind::fedavg);
  const auto state = ServerAggState::initial(prev, 1);
  CHECK(aggregate(p, prev, {update("a", {1, 2}, 5)}, state).global[0].values ==
        std::vector<double>{1, 2});

  p.retained_fraction = 0.25;
  CHECK(aggregate(p, prev, {update("a", {2, 2}, 5)}, state).global[0].values ==
        std::vector<double>{0.25 * 10 + 0.75 * 2, 0.25 * -10 + 0.75 * 2});
}

TEST_CASE("scaffold with unit server step and full participation averages") {
  auto p = params(AlgorithmKind::scaffold);
  p.local_lr = 0.1;
  p.server_step = 1.0;
  std::vector<ClientUpdate> ups{update("a", {1, 5}, 1), update("b", {3, 1}, 9)};
  for (auto& u : ups) u.delta_c = vec({0, 0});
  const auto r = aggregate(p, vec({0, 0}), ups, ServerAggState::initial(vec({0, 0}), 2));
  CHECK(r.global[0].values == std::vector<double>{2, 3});
}

TEST_CASE("scaffold update without delta_c is rejected") {
  auto p = params(AlgorithmKind::scaffold);
  p.local_lr = 0.1;
  CHECK_THROWS_AS(aggregate(p, vec({0}), {update("a", {1}, 1)},
                            ServerAggState::initial(vec({0}), 1)),
                  std::invalid_argument);
}

TEST_CASE("aggregate rejects structural mismatches") {
  CHECK_THROWS_AS(aggregate(params(AlgorithmKind::fedavg), vec({0, 0}), {update("a", {1}, 1)},
                            ServerAggState::initial(vec({0, 0}), 1)),
                  model::StructureMismatch);
  CHECK_THROWS_AS(aggregate(params(AlgorithmKind::fedavg), vec({0}), {},
                            ServerAggState::initial(vec({0}), 1)),
                  std::invalid_argument);
}

TEST_CASE("aggregate is pure and order independent") {
  std::mt19937_64 rng(5);
  const ModelWeights prev = random_model(rng);
  for (auto kind : {AlgorithmKind::fedavg, AlgorithmKind::fedprox, AlgorithmKind::feddyn,
                    AlgorithmKind::scaffold}) {
    auto p = params(kind);
    p.mu = 0.1;
    p.local_lr = 0.01;
    p.retained_fraction = 0.2;
    std::vector<ClientUpdate> ups;
    for (const char* id : {"c", "a", "b"}) {
      ClientUpdate u;
      u.client_id = id;
      u.new_weights = random_model(rng);
      u.n_train_samples = 3 + ups.size();
      u.delta_c = random_model(rng);
      ups.push_back(u);
    }
    const auto state = ServerAggState::initial(prev, 3);
    const auto ups_copy = ups;
    const auto prev_copy = prev;
    const auto first = aggregate(p, prev, ups, state);
    const auto second = aggregate(p, prev, ups, state);
    CHECK(first.global.bitwise_equal(second.global));
    CHECK(prev.bitwise_equal(prev_copy));
    for (std::size_t i = 0; i < ups.size(); ++i) CHECK(ups[i].new_weights.bitwise_equal(ups_copy[i].new_weights));

    std::reverse(ups.begin(), ups.end());
    CHECK(aggregate(p, prev, ups, state).global.bitwise_equal(first.global));
    CHECK(first.state.round == 1);
  }
}

TEST_CASE("modifiers reduce to identity at zero coefficients") {
  const ModelWeights global = vec({1, 2});
  ClientAlgState state;
  auto prox = params(AlgorithmKind::fedprox);
  prox.mu = 0.0;
  CHECK(make_modifier(prox, global, state, nullptr).is_identity());
  CHECK(make_modifier(params(AlgorithmKind::fedavg), global, state, nullptr).is_identity());

  auto sc = params(AlgorithmKind::scaffold);
  sc.local_lr = 0.1;
  const ModelWeights zero_c = global.zeros_like();
  auto mod = make_modifier(sc, global, state, &zero_c);
  ModelWeights g = vec({0.3, -0.7});
  mod.apply(vec({5, 5}), g);
  CHECK(g[0].values == std::vector<double>{0.3, -0.7});
}

TEST_CASE("fedprox modifier adds the proximal pull") {
  auto p = params(AlgorithmKind::fedprox);
  p.mu = 2.0;
  const auto mod = make_modifier(p, vec({0.0}), ClientAlgState{}, nullptr);
  ModelWeights g = vec({1.0});
  mod.apply(vec({0.5}), g);
  CHECK(g[0].values[0] == 2.0);
}

TEST_CASE("scaffold and feddyn modifiers apply the control terms") {
  auto sc = params(AlgorithmKind::scaffold);
  sc.local_lr = 0.1;
  ClientAlgState state;
  state.scaffold_c_i = vec({1.0});
  const ModelWeights c = vec({3.0});
  ModelWeights g = vec({0.5});
  make_modifier(sc, vec({0.0}), state, &c).apply(vec({9.0}), g);
  CHECK(g[0].values[0] == 0.5 - 1.0 + 3.0);

  auto dyn = params(AlgorithmKind::feddyn);
  dyn.mu = 0.5;
  state.feddyn_g_k = vec({0.25});
  ModelWeights g2 = vec({1.0});
  make_modifier(dyn, vec({1.0}), state, nullptr).apply(vec({3.0}), g2);
  CHECK(g2[0].values[0] == 1.0 - 0.25 + 0.5 * 2.0);
}

TEST_CASE("scaffold control variate update") {
  auto p = params(AlgorithmKind::scaffold);
  p.local_lr = 0.1;
  // No movement, zero controls: nothing changes.
  auto none = finalize_client_update(p, vec({2.0}), vec({2.0}), ClientAlgState{}, nullptr, 5);
  CHECK(none.delta_c->operator[](0).values[0] == 0.0);
  CHECK(none.state.scaffold_c_i[0].values[0] == 0.0);

  // global - trained = 1, K = 1, lr = 0.1: c_i+ = 10.
  auto moved = finalize_client_update(p, vec({1.0}), vec({0.0}), ClientAlgState{}, nullptr, 1);
  CHECK(moved.state.scaffold_c_i[0].values[0] == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(moved.delta_c->operator[](0).values[0] == doctest::Approx(10.0).epsilon(1e-15));

  CHECK_THROWS_AS(finalize_client_update(p, vec({1.0}), vec({0.0}), ClientAlgState{}, nullptr, 0),
                  std::invalid_argument);
}

TEST_CASE("feddyn gradient state follows the displacement recursion") {
  auto p = params(AlgorithmKind::feddyn);
  p.mu = 0.5;
  auto still = finalize_client_update(p, vec({1.0}), vec({1.0}), ClientAlgState{}, nullptr, 3);
  CHECK(still.state.feddyn_g_k[0].values[0] == 0.0);
  CHECK_FALSE(still.delta_c);
  ClientAlgState s;
  s.feddyn_g_k = vec({0.2});
  auto moved = finalize_client_update(p, vec({1.0}), vec({3.0}), s, nullptr, 3);
  CHECK(moved.state.feddyn_g_k[0].values[0] == doctest::Approx(0.2 - 0.5 * 2.0));
}

TEST_CASE("scaffold server control equals the mean client control under full participation") {
  std::mt19937_64 rng(11);
  auto p = params(AlgorithmKind::scaffold);
  p.local_lr = 0.05;
  ModelWeights global = random_model(rng);
  ServerAggState server = ServerAggState::initial(global, 3);
  std::vector<ClientAlgState> clients(3);
  for (int round = 0; round < 10; ++round) {
    std::vector<ClientUpdate> ups;
    for (std::size_t i = 0; i < clients.size(); ++i) {
      ModelWeights trained = random_model(rng);
      auto fin = finalize_client_update(p, global, trained, clients[i], &server.scaffold_c, 7);
      clients[i] = fin.state;
      ClientUpdate u;
      u.client_id = "c" + std::to_string(i);
      u.new_weights = trained;
      u.n_train_samples = 10;
      u.delta_c = fin.delta_c;
      ups.push_back(u);
    }
    auto r = aggregate(p, global, ups, server);
    global = r.global;
    server = r.state;
    for (std::size_t b = 0; b < global.size(); ++b) {
      for (std::size_t k = 0; k < global[b].values.size(); ++k) {
        double mean = 0;
        for (const auto& c : clients) mean += c.scaffold_c_i[b].values[k] / 3.0;
        CHECK(std::abs(server.scaffold_c[b].values[k] - mean) <= 1e-9 * std::max(1.0, std::abs(mean)));
      }
    }
  }
}

TEST_CASE("feddyn server state matches recomputation from displacements") {
  std::mt19937_64 rng(13);
  for (std::size_t n_clients : {1u, 3u}) {
    auto p = params(AlgorithmKind::feddyn);
    p.mu = 0.1;
    ModelWeights global = random_model(rng);
    ServerAggState server = ServerAggState::initial(global, n_clients);
    ModelWeights displacement_sum = global.zeros_like();
    for (int round = 0; round < 8; ++round) {
      std::vector<ClientUpdate> ups;
      for (std::size_t i = 0; i < n_clients; ++i) {
        ClientUpdate u;
        u.client_id = "c" + std::to_string(i);
        u.new_weights = random_model(rng);
        u.n_train_samples = 1;
        for (std::size_t b = 0; b < global.size(); ++b)
          for (std::size_t k = 0; k < global[b].values.size(); ++k)
            displacement_sum[b].values[k] += u.new_weights[b].values[k] - global[b].values[k];
        ups.push_back(u);
      }
      auto r = aggregate(p, global, ups, server);
      for (std::size_t b = 0; b < global.size(); ++b) {
        for (std::size_t k = 0; k < global[b].values.size(); ++k) {
          const double h = -p.mu / static_cast<double>(n_clients) * displacement_sum[b].values[k];
          CHECK(std::abs(r.state.feddyn_h[b].values[k] - h) <= 1e-9 * std::max(1.0, std::abs(h)));
          if (n_clients == 1) {
            const double closed = ups[0].new_weights[b].values[k] - h / p.mu;
            CHECK(std::abs(r.global[b].values[k] - closed) <= 1e-9 * std::max(1.0, std::abs(closed)));
          }
        }
      }
      global = r.global;
      server = r.state;
    }
  }
}

TEST_CASE("fedavg of one full-batch SGD step per equal shard is one pooled GD step") {
  using namespace fedplat::model;
  const Dataset pooled = synth_dataset(21, 90, 0.3, 4, SynthOptions{2.0});
  const ModelConfig config = make_mlp_config(4, 1, 5, Activation::tanh, 0.0);
  const ModelWeights w0 = build_model(config, 3);
  TrainingSettings s;
  s.optimizer = Optimizer::sgd;
  s.learning_rate = 0.5;
  s.epochs = 1;

  std::vector<ClientUpdate> ups;
  for (int c = 0; c < 3; ++c) {
    std::vector<std::size_t> rows;
    for (std::size_t r = c * 30; r < (c + 1) * 30u; ++r) rows.push_back(r);
    const Dataset shard = pooled.subset(rows);
    s.batch_size = shard.size();
    ClientUpdate u;
    u.client_id = "c" + std::to_string(c);
    u.new_weights = train_local(config, w0, shard, s, nullptr).weights;
    u.n_train_samples = shard.size();
    ups.push_back(u);
  }
  const auto fed = aggregate(params(AlgorithmKind::fedavg), w0, ups, ServerAggState::initial(w0, 3));

  s.batch_size = pooled.size();
  const ModelWeights central = train_local(config, w0, pooled, s, nullptr).weights;
  for (std::size_t b = 0; b < w0.size(); ++b)
    for (std::size_t k = 0; k < w0[b].values.size(); ++k)
      CHECK(std::abs(fed.global[b].values[k] - central[b].values[k]) <=
            1e-9 * std::max(std::abs(central[b].values[k]), 1e-12));
}

TEST_CASE("weighted metric mean") {
  CHECK(weighted_metric_mean({0.5}, {10}) == 0.5);
  CHECK(weighted_metric_mean({0.0, 1.0}, {1, 3}) == 0.75);
  CHECK(weighted_metric_mean({0.2, 0.4, 0.9}, {2, 2, 2}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(weighted_metric_mean({1.0}, {0}), std::invalid_argument);
  CHECK_THROWS_AS(weighted_metric_mean({1.0, 2.0}, {1}), std::invalid_argument);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-5, 5);
  std::uniform_int_distribution<std::size_t> n(0, 20);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> v(5);
    std::vector<std::size_t> w(5);
    for (auto& x : v) x = u(rng);
    for (auto& x : w) x = n(rng);
    w[0] += 1;
    const double m = weighted_metric_mean(v, w);
    CHECK(m >= *std::min_element(v.begin(), v.end()) - 1e-12);
    CHECK(m <= *std::max_element(v.begin(), v.end()) + 1e-12);
  }
}

TEST_CASE("algorithm params validation") {
  std::vector<util::FieldError> errors;
  parse_algorithm_params({{"kind", "feddyn"}}, "settings/algorithm", errors);
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].path == "settings/algorithm/mu");

  errors.clear();
  parse_algorithm_params({{"kind", "scaffold"}}, "a", errors);
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].path == "a/local_lr");

  errors.clear();
  parse_algorithm_params({{"kind", "fedprox"}, {"mu", 0.0}}, "a", errors);
  CHECK(errors.empty());

  errors.clear();
  parse_algorithm_params({{"kind", "fedsgd"}}, "a", errors);
  CHECK(errors.size() == 1);

  const AlgorithmParams back = algorithm_params_from_json(to_json(
      AlgorithmParams{AlgorithmKind::scaffold, 0.0, 0.1, 0.5, 0.01}));
  CHECK(back.kind == AlgorithmKind::scaffold);
  CHECK(back.local_lr == 0.01);
  CHECK(back.server_step == 0.5);
}
