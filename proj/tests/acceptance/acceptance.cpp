// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "federation_fixture.hpp"
#include "fixtures.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "raw_node.hpp"
#include "fedplat/algo/algorithms.hpp"
#include "fedplat/bench/benchmark.hpp"
#include "fedplat/bench/federation.hpp"
#include "fedplat/cc/control_center.hpp"
#include "fedplat/model/metrics.hpp"
#include "fedplat/model/train.hpp"
#include "fedplat/proto/codec.hpp"
#include "fedplat/proto/embedded_broker.hpp"

using namespace fedplat;
using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;
using fixtures::TempDir;
using util::Json;

namespace {

class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void note(const std::string& s) { notes_.push_back(s); }
  const std::vector<std::string>& failures() const { return failures_; }
  const std::vector<std::string>& notes() const { return notes_; }

 private:
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

bool close_rel(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

Json small_doc(std::size_t rounds, std::size_t min_replies, double ack_s = 0.5, double train_s = 2.0) {
  auto doc = fixtures::experiment_doc(4, rounds, min_replies);
  auto& p = doc["settings"]["process"];
  p["ack_timeout_s"] = ack_s;
  p["train_timeout_s"] = train_s;
  p["eval_timeout_s"] = 1.0;
  return doc;
}

std::string read_all(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

// 1 ---------------------------------------------------------------------------

void fedavg_equals_pooled_step(Check& k) {
  const auto pooled = model::synth_dataset(21, 90, 0.3, 4, {2.0});
  auto cfg = model::make_mlp_config(4, 1, 5, model::Activation::tanh, 0.0);
  cfg.seed_policy = model::SeedPolicy::explicit_seed;
  cfg.seed = 3;
  const auto w0 = model::build_model(cfg, 3);

  TempDir tmp;
  auto opts = fixtures::federation_options(tmp.path);
  opts.observer.reset();
  for (int c = 0; c < 3; ++c) {
    std::vector<std::size_t> rows;
    for (std::size_t r = c * 30; r < (c + 1) * 30u; ++r) rows.push_back(r);
    const auto shard = pooled.subset(rows);
    opts.participants[c].data = std::make_shared<cn::StaticDataLoader>(shard, shard);
  }
  bench::InProcessFederation fed(opts);
  fed.start();

  model::TrainingSettings s;
  s.optimizer = model::Optimizer::sgd;
  s.learning_rate = 0.5;
  s.epochs = 1;
  s.batch_size = 30;
  auto doc = small_doc(1, 3, 2.0, 5.0);
  doc["model_config"] = model::to_json(cfg);
  doc["settings"]["training"] = model::to_json(s);
  doc["settings"]["process"]["post_eval"] = false;
  doc["settings"]["algorithm"] = {{"kind", "fedavg"}, {"retained_fraction", 0.0}};
  const auto rec = fed.run(doc, 10s);
  k.expect(rec.aggregated_rounds == 1, "round not aggregated");
  const auto global = fed.ps().final_model(rec.spec.experiment_id);
  k.expect(global.has_value(), "no final model");
  if (!global) return;

  s.batch_size = pooled.size();
  const auto central = model::train_local(cfg, w0, pooled, s, nullptr).weights;
  double worst = 0.0;
  for (std::size_t b = 0; b < w0.size(); ++b) {
    for (std::size_t i = 0; i < w0[b].values.size(); ++i) {
      const double ref = central[b].values[i];
      worst = std::max(worst, std::abs((*global)[b].values[i] - ref) / std::max(std::abs(ref), 1e-12));
    }
  }
  k.expect(worst <= 1e-9, fmt::format("max relative difference {:.3g}", worst));
  k.note(fmt::format("max rel diff {:.2g}", worst));
}

// 2 ---------------------------------------------------------------------------

void gradient_check(Check& k) {
  const auto r = oracles::run_gradient_check(
      120, 4242,
      [](const model::ModelConfig& c, const model::ModelWeights& w, const model::Matrix& x,
         const std::vector<double>& y, std::uint64_t mask_seed) {
        model::Rng rng(mask_seed);
        return model::loss_and_grad(c, w, x, y, nullptr, rng).grads;
      });
  k.expect(r.trials >= 100, "fewer than 100 models");
  k.expect(r.max_relative_error < 1e-4, fmt::format("max relative error {:.3g}", r.max_relative_error));
  k.note(fmt::format("{} MLPs, max rel err {:.2g}", r.trials, r.max_relative_error));
}

// 3 ---------------------------------------------------------------------------

std::vector<model::ModelWeights> platform_globals(const Json& algorithm, std::size_t rounds) {
  TempDir tmp;
  bench::InProcessFederation fed(fixtures::federation_options(tmp.path));
  std::vector<model::ModelWeights> globals;
  fed.ps().on_round([&](const ps::RoundReport& r) {
    if (r.outcome == ps::RoundOutcome::aggregated) globals.push_back(r.global);
  });
  fed.start();
  auto doc = small_doc(rounds, 3, 2.0, 5.0);
  doc["model_config"]["layers"][0]["dropout_rate"] = 0.3;
  doc["settings"]["algorithm"] = algorithm;
  fed.run(doc, 60s);
  return globals;
}

void fedprox_zero_is_fedavg(Check& k) {
  const auto avg = platform_globals({{"kind", "fedavg"}}, 10);
  const auto prox = platform_globals({{"kind", "fedprox"}, {"mu", 0.0}}, 10);
  k.expect(avg.size() == 10 && prox.size() == 10,
           fmt::format("aggregated rounds: fedavg {}, fedprox {}", avg.size(), prox.size()));
  std::size_t same = 0;
  for (std::size_t r = 0; r < std::min(avg.size(), prox.size()); ++r) {
    if (avg[r].bitwise_equal(prox[r])) {
      ++same;
    } else {
      k.expect(false, fmt::format("round {} differs", r + 1));
    }
  }
  k.note(fmt::format("{} rounds bit-identical", same));
}

// 4 and 5: federated rounds on the algorithm layer with real local training ---

struct Sim {
  model::ModelConfig cfg = model::make_mlp_config(4, 1, 6, model::Activation::tanh, 0.0);
  model::TrainingSettings s;
  std::vector<model::Dataset> shards;

  explicit Sim(std::size_t n_clients) {
    s.optimizer = model::Optimizer::sgd;
    s.learning_rate = 0.05;
    s.batch_size = 16;
    s.epochs = 2;
    for (std::size_t i = 0; i < n_clients; ++i) {
      shards.push_back(model::synth_dataset(100 + i, 60 + 10 * i, 0.25, 4, {1.0 + 0.5 * i}));
    }
  }
};

void scaffold_invariant(Check& k) {
  Sim sim(3);
  algo::AlgorithmParams p;
  p.kind = algo::AlgorithmKind::scaffold;
  p.local_lr = sim.s.learning_rate;
  auto global = model::build_model(sim.cfg, 5);
  auto server = algo::ServerAggState::initial(global, 3);
  std::vector<algo::ClientAlgState> clients(3);
  double worst = 0.0;
  for (int round = 0; round < 10; ++round) {
    std::vector<algo::ClientUpdate> ups;
    for (std::size_t i = 0; i < 3; ++i) {
      const auto mod = algo::make_modifier(p, global, clients[i], &server.scaffold_c);
      auto s = sim.s;
      s.rng_seed = 1000 * round + i;
      const auto tr = model::train_local(sim.cfg, global, sim.shards[i], s, &mod);
      const auto fin = algo::finalize_client_update(p, global, tr.weights, clients[i], &server.scaffold_c, tr.steps);
      clients[i] = fin.state;
      ups.push_back({"c" + std::to_string(i), tr.weights, sim.shards[i].size(), fin.delta_c, std::nullopt, std::nullopt});
    }
    const auto r = algo::aggregate(p, global, ups, server);
    global = r.global;
    server = r.state;
    for (std::size_t b = 0; b < global.size(); ++b) {
      for (std::size_t j = 0; j < global[b].values.size(); ++j) {
        double mean = 0.0;
        for (const auto& c : clients) mean += c.scaffold_c_i[b].values[j];
        mean /= 3.0;
        const double c = server.scaffold_c[b].values[j];
        worst = std::max(worst, std::abs(c - mean) / std::max(1.0, std::abs(mean)));
        if (!close_rel(c, mean, 1e-9)) {
          k.expect(false, fmt::format("round {}: c {} vs mean {}", round + 1, c, mean));
          return;
        }
      }
    }
  }
  k.note(fmt::format("10 rounds, max deviation {:.2g}", worst));
}

void feddyn_consistency(Check& k) {
  for (std::size_t n : {1u, 3u}) {
    Sim sim(n);
    algo::AlgorithmParams p;
    p.kind = algo::AlgorithmKind::feddyn;
    p.mu = 0.1;
    auto global = model::build_model(sim.cfg, 9);
    auto server = algo::ServerAggState::initial(global, n);
    std::vector<algo::ClientAlgState> clients(n);
    auto displacement = global.zeros_like();
    double worst = 0.0;
    for (int round = 0; round < 10; ++round) {
      std::vector<algo::ClientUpdate> ups;
      for (std::size_t i = 0; i < n; ++i) {
        const auto mod = algo::make_modifier(p, global, clients[i], nullptr);
        auto s = sim.s;
        s.rng_seed = 77 * round + i;
        const auto tr = model::train_local(sim.cfg, global, sim.shards[i], s, &mod);
        clients[i] = algo::finalize_client_update(p, global, tr.weights, clients[i], nullptr, tr.steps).state;
        for (std::size_t b = 0; b < global.size(); ++b)
          for (std::size_t j = 0; j < global[b].values.size(); ++j)
            displacement[b].values[j] += tr.weights[b].values[j] - global[b].values[j];
        ups.push_back({"c" + std::to_string(i), tr.weights, sim.shards[i].size(), std::nullopt, std::nullopt,
                       std::nullopt});
      }
      const auto r = algo::aggregate(p, global, ups, server);
      for (std::size_t b = 0; b < global.size(); ++b) {
        for (std::size_t j = 0; j < global[b].values.size(); ++j) {
          const double h = -p.mu / static_cast<double>(n) * displacement[b].values[j];
          const double kept = r.state.feddyn_h[b].values[j];
          worst = std::max(worst, std::abs(kept - h) / std::max(1.0, std::abs(h)));
          if (!close_rel(kept, h, 1e-9)) {
            k.expect(false, fmt::format("N={} round {}: h {} vs recomputed {}", n, round + 1, kept, h));
            return;
          }
        }
      }
      global = r.global;
      server = r.state;
    }
    k.note(fmt::format("N={} max deviation {:.2g}", n, worst));
  }
}

// 6 ---------------------------------------------------------------------------

void scenario_healthy(Check& k) {
  TempDir tmp;
  bench::InProcessFederation fed(fixtures::federation_options(tmp.path));
  fed.start();
  const auto rec = fed.run(small_doc(2, 3), 5s);
  k.expect(rec.status == ps::ExperimentStatus::completed, "(a) not completed");
  k.expect(rec.rounds.size() == 2, "(a) round count");
  for (const auto& r : rec.rounds) {
    k.expect(r.outcome == ps::RoundOutcome::aggregated, "(a) round not aggregated");
    k.expect(r.replies == std::set<std::string>{"cn-1", "cn-2", "cn-3"}, "(a) missing replies");
  }
  k.expect(fed.ps().final_model(rec.spec.experiment_id).has_value(), "(a) no final model");
}

void scenario_silent_at_ack(Check& k) {
  TempDir tmp;
  bench::InProcessFederation fed(fixtures::federation_options(
      tmp.path, {fixtures::synthetic_loader(1), fixtures::synthetic_loader(2), nullptr}));
  fixtures::RawNode silent(fed, "cn-3", nullptr);
  std::vector<ps::RoundReport> reports;
  fed.ps().on_round([&](const ps::RoundReport& r) { reports.push_back(r); });
  fed.start();
  auto doc = small_doc(1, 3);
  fed.run(doc, 5s);
  k.expect(reports.size() == 1, "(b) round count");
  if (reports.empty()) return;
  k.expect(reports[0].outcome == ps::RoundOutcome::skipped_acks, "(b) round not skipped");
  const auto cfg = model::model_config_from_json(doc["model_config"]);
  k.expect(reports[0].global.bitwise_equal(model::build_model(cfg, 7)), "(b) global changed");
  const auto seen = silent.seen();
  k.expect(std::count(seen.begin(), seen.end(), proto::MsgType::job_abort) == 1, "(b) no JobAbort broadcast");
}

void scenario_failure_after_ack(Check& k) {
  TempDir tmp;
  bench::InProcessFederation fed(fixtures::federation_options(
      tmp.path,
      {fixtures::synthetic_loader(1), fixtures::synthetic_loader(2), std::make_shared<fixtures::FailingLoader>()}));
  std::vector<ps::RoundReport> reports;
  Clock::time_point done;
  fed.ps().on_round([&](const ps::RoundReport& r) {
    reports.push_back(r);
    done = Clock::now();
  });
  fed.start();
  const auto t0 = Clock::now();
  fed.run(small_doc(1, 3, 0.5, 4.0), 8s);  // deadline 5.5 s after the broadcast
  k.expect(reports.size() == 1, "(c) round count");
  if (reports.empty()) return;
  k.expect(reports[0].outcome == ps::RoundOutcome::skipped_replies, "(c) not skipped");
  k.expect(reports[0].failures == std::set<std::string>{"cn-3"}, "(c) failure not recorded");
  k.expect(done - t0 < 2s, "(c) skip waited for the deadline");
}

void scenario_abort_no_reply(Check& k) {
  TempDir tmp;
  auto big = model::synth_dataset(4, 40000, 0.2, 4, {2.0});
  bench::InProcessFederation fed(fixtures::federation_options(
      tmp.path, {std::make_shared<cn::StaticDataLoader>(big, big), fixtures::synthetic_loader(2), nullptr}));
  fixtures::RawNode silent(fed, "cn-3", nullptr);
  fed.start();
  auto doc = small_doc(1, 3, 0.5, 30.0);
  doc["settings"]["training"]["epochs"] = 200;
  doc["settings"]["training"]["batch_size"] = 8;
  fed.run(doc, 5s);
  auto& cn1 = fed.client("cn-1");
  k.expect(cn1.wait_idle(2s), "(d) recipient still training");
  std::this_thread::sleep_for(200ms);
  const auto c = cn1.counters();
  k.expect(c.acks == 1 && c.aborted == 1, "(d) abort not applied");
  k.expect(c.replies == 0 && c.failures == 0, "(d) recipient replied");
  std::size_t from_cn1 = 0;
  for (const auto& p : fed.broker().publish_log()) from_cn1 += p.topic == fed.scheme().job_replies("cn-1");
  k.expect(from_cn1 == 1, "(d) messages beyond the acknowledgement");
}

void scenario_stale_reply(Check& k) {
  TempDir tmp;
  bench::InProcessFederation fed(fixtures::federation_options(
      tmp.path, {fixtures::synthetic_loader(1), fixtures::synthetic_loader(2), nullptr}));
  const std::string topic = fed.scheme().job_replies("cn-3");
  fixtures::RawNode stale(fed, "cn-3", [&](proto::Session& s, const proto::Envelope& e) {
    if (e.msg_type != proto::MsgType::job_request) return;
    fixtures::publish_as(s, topic, proto::MsgType::job_acknowledge, e.experiment_id, e.round, Json::object());
    proto::JobReply bogus;
    bogus.n_train_samples = 1000;
    fixtures::publish_as(s, topic, proto::MsgType::job_reply, e.experiment_id, e.round + 7, to_json(bogus));
    fixtures::publish_as(s, topic, proto::MsgType::job_failed, e.experiment_id, e.round,
                         to_json(proto::JobFailed{"gave up"}));
  });
  fed.start();
  const auto rec = fed.run(small_doc(1, 2), 5s);
  k.expect(rec.status == ps::ExperimentStatus::completed, "(e) not completed");
  k.expect(!rec.rounds.empty() && rec.rounds[0].replies == std::set<std::string>{"cn-1", "cn-2"},
           "(e) stale reply counted");
  k.expect(read_all(fed.ps().experiment_dir(rec.spec.experiment_id) / "events.log").find("ignored stale") !=
               std::string::npos,
           "(e) stale reply not logged");
}

void scenario_observer(Check& k) {
  TempDir tmp;
  bench::InProcessFederation fed(fixtures::federation_options(tmp.path));
  fed.start();
  const auto rec = fed.run(small_doc(2, 3), 5s);
  k.expect(rec.status == ps::ExperimentStatus::completed, "(f) not completed");
  k.expect(fed.observer()->counters().job_requests == 0, "(f) observer received a JobRequest");
  k.expect(fed.broker().audit_log().empty(), "(f) ACL violations logged");
}

void orchestration(Check& k) {
  const std::pair<const char*, void (*)(Check&)> scenarios[] = {
      {"a", scenario_healthy},          {"b", scenario_silent_at_ack}, {"c", scenario_failure_after_ack},
      {"d", scenario_abort_no_reply},   {"e", scenario_stale_reply},   {"f", scenario_observer}};
  std::string times;
  for (const auto& [name, fn] : scenarios) {
    const auto t0 = Clock::now();
    try {
      fn(k);
    } catch (const std::exception& e) {
      k.expect(false, fmt::format("({}) {}", name, e.what()));
    }
    const double s = seconds_since(t0);
    k.expect(s < 5.0, fmt::format("({}) took {:.2f} s", name, s));
    times += fmt::format("{}{}={:.1f}s", times.empty() ? "" : " ", name, s);
  }
  k.note(times);
}

// 7 ---------------------------------------------------------------------------

void retained_status(Check& k) {
  TempDir tmp;
  const proto::TopicScheme scheme("acc");
  std::vector<proto::NodeIdentity> ids{{"ps", proto::Role::parameter_server},
                                       {"cn-1", proto::Role::client_participant},
                                       {"cn-2", proto::Role::client_participant},
                                       {"cn-3", proto::Role::client_participant},
                                       {"cc", proto::Role::control_center}};
  proto::EmbeddedBroker broker(proto::standard_rules(scheme, ids), {"ps", "cn-1", "cn-2", "cn-3", "cc"});
  ps::PsConfig pc;
  pc.prefix = "acc";
  pc.artifact_root = tmp.path / "ps";
  pc.participants = {"cn-1", "cn-2", "cn-3"};
  pc.heartbeat = 60s;
  ps::ParameterServer server(pc, broker.connect("ps"));
  server.start();
  std::vector<std::unique_ptr<cn::ClientNode>> nodes;
  for (int i = 1; i <= 3; ++i) {
    cn::ClientConfig c;
    c.client_id = "cn-" + std::to_string(i);
    c.prefix = "acc";
    c.artifact_root = tmp.path / c.client_id;
    c.data = fixtures::synthetic_loader(i);
    c.heartbeat = 60s;
    nodes.push_back(std::make_unique<cn::ClientNode>(c, broker.connect(c.client_id)));
    nodes.back()->start();
  }
  for (int i = 0; i < 200 && broker.retained_count() < 4; ++i) std::this_thread::sleep_for(10ms);
  k.expect(broker.retained_count() == 4, "nodes did not publish status");
  std::this_thread::sleep_for(100ms);
  const std::size_t before = broker.publish_log().size();

  cc::ControlCenter center({.client_id = "cc",
                            .prefix = "acc",
                            .registry = {{"ps", proto::Role::parameter_server},
                                         {"cn-1", proto::Role::client_participant},
                                         {"cn-2", proto::Role::client_participant},
                                         {"cn-3", proto::Role::client_participant}},
                            .heartbeat = 60s},
                           broker.connect("cc"));
  center.start();
  cc::NetworkView view;
  for (int i = 0; i < 200; ++i) {
    view = center.network();
    if (std::all_of(view.nodes.begin(), view.nodes.end(), [](const cc::NodeView& n) { return !n.state.empty(); }))
      break;
    std::this_thread::sleep_for(10ms);
  }
  k.expect(broker.publish_log().size() == before, "new publishes during attach");
  k.expect(view.nodes.size() == 4, fmt::format("{} nodes in view", view.nodes.size()));
  for (const auto& n : view.nodes) {
    k.expect(n.state == "IDLE", n.client_id + " state '" + n.state + "'");
    k.expect(!n.last_seen.empty() && !n.stale && !n.unknown, n.client_id + " not fresh/known");
    k.expect(n.role == (n.client_id == "ps" ? "parameter_server" : "client_participant"), n.client_id + " role");
  }
  center.stop();
  for (auto& n : nodes) n->stop();
  server.stop();
  k.note(fmt::format("{} nodes from retained reports, 0 new publishes", view.nodes.size()));
}

// 8 ---------------------------------------------------------------------------

void codec_round_trip(Check& k) {
  std::mt19937_64 rng(8);
  int f32 = 0, f64 = 0, with_nan = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto w = generators::random_weights(rng);
    const auto enc = proto::encode_weights(w);
    const auto back = proto::decode_weights(enc.manifest, enc.bytes);
    if (!back.bitwise_equal(w) || proto::encode_weights(back).bytes != enc.bytes) {
      k.expect(false, fmt::format("model {} did not round-trip", t));
      return;
    }
    if (w.size() > 0) (w[0].dtype == model::DType::f32 ? f32 : f64)++;
    bool nan = false;
    for (const auto& b : w.blocks())
      for (double v : b.values) nan = nan || v != v;
    with_nan += nan;
  }
  k.expect(f32 > 0 && f64 > 0 && with_nan > 0, "generator missed a value class");
  k.note(fmt::format("1000 models ({} f32, {} f64, {} with NaN)", f32, f64, with_nan));
}

// 9 ---------------------------------------------------------------------------

void average_precision_oracle(Check& k) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> size(1, 32);
  std::uniform_int_distribution<int> level(0, 9);
  std::bernoulli_distribution coin(0.4);
  for (int t = 0; t < 500; ++t) {
    const int n = size(rng);
    std::vector<double> scores(n), labels(n);
    for (int i = 0; i < n; ++i) {
      scores[i] = (t % 2 ? level(rng) / 10.0 : std::uniform_real_distribution<>(0, 1)(rng));
      labels[i] = coin(rng) ? 1.0 : 0.0;
    }
    labels[0] = 1.0;
    const double got = model::average_precision(scores, labels);
    const double want = oracles::brute_force_average_precision(scores, labels);
    if (got != want) {
      k.expect(false, fmt::format("instance {}: {} vs {}", t, got, want));
      return;
    }
  }
  const std::vector<double> labels{0, 1, 0, 0, 1, 1, 0, 0};
  std::vector<double> perfect;
  for (double y : labels) perfect.push_back(y > 0.5 ? 0.9 : 0.1);
  k.expect(model::average_precision(perfect, labels) == 1.0, "perfect classifier");
  const double constant = model::average_precision(std::vector<double>(8, 0.3), labels);
  k.expect(std::abs(constant - 3.0 / 8.0) < 1e-15, fmt::format("constant scores gave {}", constant));
  k.note("500 instances exact; perfect 1.0; constant = prevalence");
}

// 10 --------------------------------------------------------------------------

void train_timeout(Check& k) {
  TempDir tmp;
  const proto::TopicScheme scheme("t");
  std::vector<proto::NodeIdentity> ids{{"ps", proto::Role::parameter_server}, {"cn-1", proto::Role::client_participant}};
  proto::EmbeddedBroker broker(proto::standard_rules(scheme, ids), {"ps", "cn-1"});
  auto ps = broker.connect("ps");
  ps->subscribe("t/job-replies/+");
  const auto data = model::synth_dataset(2, 2000, 0.2, 8, {1.0});
  cn::ClientConfig c;
  c.client_id = "cn-1";
  c.prefix = "t";
  c.artifact_root = tmp.path;
  c.data = std::make_shared<cn::StaticDataLoader>(data, data);
  c.heartbeat = 10s;
  cn::ClientNode node(c, broker.connect("cn-1"));
  node.start();

  proto::JobRequest j;
  j.model_config = model::make_mlp_config(8, 2, 16, model::Activation::tanh, 0.0);
  j.training.batch_size = 16;
  j.training.learning_rate = 0.01;
  j.training.epochs = 1;
  j.global_weights = model::build_model(j.model_config, 3);
  j.eval_timeout_s = 5.0;
  const auto t0 = Clock::now();
  const auto once = model::train_local(j.model_config, j.global_weights, data, j.training, nullptr);
  const double epoch_s = seconds_since(t0);
  const double batch_s = epoch_s / static_cast<double>(once.steps);
  j.training.epochs = static_cast<std::size_t>(10.0 / std::max(epoch_s, 1e-4)) + 1;
  j.train_timeout_s = 1.0;

  const auto sent = Clock::now();
  fixtures::publish_as(*ps, "t/job-requests", proto::MsgType::job_request, "timeout", 1, to_json(j));
  std::optional<proto::Envelope> reply;
  const auto deadline = sent + 15s;
  while (Clock::now() < deadline && !reply) {
    auto m = ps->receive(deadline);
    if (!m) continue;
    auto e = proto::parse_envelope(m->payload);
    if (e.msg_type == proto::MsgType::job_reply || e.msg_type == proto::MsgType::job_failed) reply = e;
  }
  const double elapsed = seconds_since(sent);
  node.stop();
  k.expect(reply && reply->msg_type == proto::MsgType::job_reply, "no JobReply");
  if (!reply || reply->msg_type != proto::MsgType::job_reply) return;
  const auto r = proto::job_reply_from_json(reply->payload);
  k.expect(r.completed_epochs < j.training.epochs, "not truncated");
  // One second plus one batch; post-evaluation and messaging share a 0.5 s allowance.
  k.expect(elapsed < 1.0 + batch_s + 0.5, fmt::format("reply after {:.3f} s", elapsed));
  k.note(fmt::format("reply after {:.3f} s, {} of {} epochs, batch {:.2g} s", elapsed, r.completed_epochs,
                     j.training.epochs, batch_s));
}

// 11 --------------------------------------------------------------------------

void benchmark_ordering(Check& k) {
  TempDir tmp;
  bench::BenchConfig c;
  c.work_dir = tmp.path / "work";
  const auto r = bench::run_comparison(c);
  const std::filesystem::path out = "bench_results";
  bench::write_results(r, out);
  std::cerr << bench::results_markdown(r) << "\n";
  const auto* local = bench::find_row(r, bench::Method::local);
  const auto* central = bench::find_row(r, bench::Method::centralized);
  const auto* fedavg = bench::find_row(r, bench::Method::fedavg);
  if (!local || !central || !fedavg) {
    k.expect(false, "missing rows");
    return;
  }
  const double l = 100.0 * local->auprc.mean, ce = 100.0 * central->auprc.mean, fa = 100.0 * fedavg->auprc.mean;
  k.expect(ce >= fa, fmt::format("Centralized {:.2f} < FedAvg {:.2f}", ce, fa));
  k.expect(fa >= l - 1.0, fmt::format("FedAvg {:.2f} < Local {:.2f} - 1", fa, l));
  k.expect(r.seconds < 900.0, fmt::format("runtime {:.0f} s", r.seconds));
  std::string ref;
  if (!r.synthetic) {
    ref = fmt::format("; reference: FedAvg {} 13.44±3, Local {} 11.95±3", std::abs(fa - 13.44) <= 3 ? "within" : "outside",
                      std::abs(l - 11.95) <= 3 ? "within" : "outside");
  }
  k.note(fmt::format("{} data: Centralized {:.2f}, FedAvg {:.2f}, Local {:.2f} AUPRC, {:.0f} s{}",
                     r.synthetic ? "synthetic" : "stroke", ce, fa, l, r.seconds, ref));
}

// 12 --------------------------------------------------------------------------

std::vector<std::string> sorted_paths(const std::vector<util::FieldError>& errors) {
  std::vector<std::string> out;
  for (const auto& e : errors) out.push_back(e.path);
  std::sort(out.begin(), out.end());
  return out;
}

void schema_validation(Check& k) {
  TempDir tmp;
  auto opts = fixtures::federation_options(tmp.path);
  opts.cc_id = "cc";
  bench::InProcessFederation fed(opts);
  fed.start();

  // The PS check runs on requests published directly, bypassing the CC gate.
  auto raw = fed.connect_as("cc");
  raw->subscribe(fed.scheme().ps_replies());
  auto ask_ps = [&](Json doc, const std::string& id) -> std::optional<proto::ExperimentRejected> {
    doc["experiment_id"] = id;
    fixtures::publish_as(*raw, fed.scheme().control_center(), proto::MsgType::experiment_request, id, 0, doc);
    const auto deadline = Clock::now() + 3s;
    while (Clock::now() < deadline) {
      auto m = raw->receive(deadline);
      if (!m) continue;
      auto e = proto::parse_envelope(m->payload);
      if (e.experiment_id != id) continue;
      if (e.msg_type == proto::MsgType::experiment_rejected) return proto::experiment_rejected_from_json(e.payload);
      return std::nullopt;
    }
    return proto::ExperimentRejected{"no answer", {}};
  };

  auto feddyn = small_doc(2, 3);
  feddyn["settings"]["algorithm"] = {{"kind", "feddyn"}};
  const auto cc_report = fed.cc().validate(feddyn);
  k.expect(sorted_paths(cc_report.errors) == std::vector<std::string>{"settings/algorithm/mu"},
           "CC did not flag settings/algorithm/mu");
  k.expect(fed.cc().submit(feddyn).outcome == cc::SubmitOutcome::invalid, "CC submitted an invalid spec");
  const auto ps_answer = ask_ps(feddyn, "acc-feddyn-no-mu");
  k.expect(ps_answer && sorted_paths(ps_answer->errors) == sorted_paths(cc_report.errors),
           "PS error paths differ from the CC");

  const auto zero = small_doc(0, 3);
  const auto zero_report = fed.cc().validate(zero);
  k.expect(!zero_report.valid, "CC accepted rounds=0");
  const auto zero_answer = ask_ps(zero, "acc-zero-rounds");
  k.expect(zero_answer && sorted_paths(zero_answer->errors) == sorted_paths(zero_report.errors),
           "PS did not reject rounds=0 with the same paths");

  auto valid = small_doc(2, 3);
  valid["settings"]["algorithm"] = {{"kind", "feddyn"}, {"mu", 0.01}};
  const auto submitted = fed.cc().submit(valid);
  k.expect(submitted.outcome == cc::SubmitOutcome::accepted, "valid spec not accepted");
  if (submitted.outcome != cc::SubmitOutcome::accepted) return;
  const auto rec = fed.ps().wait_for_completion(submitted.experiment_id, 10s);
  k.expect(rec && rec->status == ps::ExperimentStatus::completed, "valid experiment did not complete");
  const auto summary = fed.cc().wait_for_experiment(submitted.experiment_id, 3s);
  k.expect(summary && summary->status == "completed", "CC did not see completion");
  k.expect(fed.ps().final_model(submitted.experiment_id).has_value(), "no final model");
  k.note("mu and rounds errors match at CC and PS; valid FedDyn run completed");
}

struct Criterion {
  int number;
  const char* title;
  double limit_s;  // 0: no limit
  void (*fn)(Check&);
};

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::off);
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const Criterion criteria[] = {
      {1, "FedAvg round equals one pooled gradient step", 10.0, fedavg_equals_pooled_step},
      {2, "gradient check on random MLPs", 60.0, gradient_check},
      {3, "FedProx mu=0 bit-identical to FedAvg", 0.0, fedprox_zero_is_fedavg},
      {4, "SCAFFOLD server control is the client mean", 0.0, scaffold_invariant},
      {5, "FedDyn h matches the displacement history", 0.0, feddyn_consistency},
      {6, "orchestration scenarios a-f", 0.0, orchestration},
      {7, "retained status populates a late CC", 0.0, retained_status},
      {8, "codec round trip on random models", 0.0, codec_round_trip},
      {9, "average precision oracle", 0.0, average_precision_oracle},
      {10, "train timeout truncates and replies", 0.0, train_timeout},
      {11, "benchmark ordering", 900.0, benchmark_ordering},
      {12, "schema validation at CC and PS", 0.0, schema_validation},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.number)) continue;
    Check k;
    const auto t0 = Clock::now();
    try {
      c.fn(k);
    } catch (const std::exception& e) {
      k.expect(false, std::string("exception: ") + e.what());
    }
    const double s = seconds_since(t0);
    if (c.limit_s > 0 && s >= c.limit_s) k.expect(false, fmt::format("over the {:.0f} s limit", c.limit_s));
    const bool pass = k.failures().empty();
    failed += !pass;
    std::string detail;
    for (const auto& f : k.failures()) detail += (detail.empty() ? "" : "; ") + f;
    if (pass) {
      for (const auto& n : k.notes()) detail += (detail.empty() ? "" : "; ") + n;
    }
    std::cout << fmt::format("{} {:>2} {} ({:.2f} s): {}", pass ? "PASS" : "FAIL", c.number, c.title, s, detail)
              << std::endl;
  }
  return failed;
}
