#include "fedplat/bench/benchmark.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "fedplat/bench/federation.hpp"
#include "fedplat/model/mlp.hpp"
#include "fedplat/model/train.hpp"
#include "fedplat/proto/codec.hpp"
#include "fedplat/util/clock.hpp"

namespace fedplat::bench {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct MethodInfo {
  Method method;
  std::string_view name;
  std::string_view label;
};

constexpr MethodInfo kMethods[] = {
    {Method::local, "local", "Local"},       {Method::centralized, "centralized", "Centralized"},
    {Method::fedavg, "fedavg", "FedAvg"},    {Method::fedprox, "fedprox", "FedProx"},
    {Method::feddyn, "feddyn", "FedDyn"},    {Method::scaffold, "scaffold", "SCAFFOLD"},
};

// AUPRC in percent from the published 2x512 runs on the stroke table.
std::optional<double> reference_auprc(Method m) {
  switch (m) {
    case Method::local: return 11.95;
    case Method::centralized: return 14.67;
    case Method::fedavg: return 13.44;
    case Method::fedprox: return 12.45;
    case Method::feddyn: return 11.80;
    case Method::scaffold: return 12.00;
  }
  return std::nullopt;
}

bool is_federated(Method m) { return m != Method::local && m != Method::centralized; }

model::ModelConfig model_config(const BenchConfig& c, std::size_t input_dim, std::uint64_t seed) {
  auto cfg = model::make_mlp_config(input_dim, c.hidden_layers, c.units, model::Activation::tanh, c.dropout);
  cfg.seed_policy = model::SeedPolicy::explicit_seed;
  cfg.seed = seed;
  return cfg;
}

model::TrainingSettings training(const BenchConfig& c, std::size_t epochs, std::uint64_t seed, double threshold) {
  model::TrainingSettings t;
  t.batch_size = c.batch_size;
  t.epochs = epochs;
  t.optimizer = model::Optimizer::adam;
  t.learning_rate = c.learning_rate;
  t.class_threshold = threshold;
  t.rng_seed = seed;
  return t;
}

struct Trained {
  model::ModelWeights weights;
  std::size_t epochs = 0;
};

// Epoch-wise training with plateau reduction and early stopping on the
// training loss (inference mode); the best epoch's weights are restored.
Trained train_with_schedule(const BenchConfig& c, const model::ModelConfig& cfg, const model::ModelWeights& init,
                            const model::Dataset& data, const model::TrainingSettings& settings) {
  auto sched = algo::SchedulerState::initial(c.scheduler, settings.learning_rate);
  std::optional<model::ModelWeights> best;
  model::TrainControl control;
  control.on_epoch_end = [&](std::size_t epoch, const model::ModelWeights& w, double& lr) {
    if (!c.scheduler.enabled) return true;
    const double loss = model::evaluate(cfg, w, data, settings.class_threshold).loss;
    auto plateau = algo::plateau_step(sched, loss, c.scheduler.direction);
    sched = plateau.state;
    lr = sched.current_lr;
    auto stop = algo::early_stop_step(sched, loss, c.scheduler.direction, epoch + 1);
    sched = stop.state;
    if (stop.improved) best = w;
    return !stop.stop;
  };
  auto result = model::train_local(cfg, init, data, settings, nullptr, control);
  Trained out;
  out.epochs = result.completed_epochs;
  out.weights = result.stop_reason == model::StopReason::stopped_by_callback && best ? *best : result.weights;
  return out;
}

util::Json experiment_doc(const BenchConfig& c, Method m, const model::ModelConfig& cfg,
                          const model::TrainingSettings& t, const std::string& id) {
  util::Json algorithm{{"kind", method_name(m)}};
  if (m == Method::fedprox) algorithm["mu"] = c.fedprox_mu;
  if (m == Method::feddyn) algorithm["mu"] = c.feddyn_mu;
  if (m == Method::scaffold) algorithm["local_lr"] = c.learning_rate;
  util::Json process{{"rounds", c.max_epochs},
                     {"min_replies", c.n_clients},
                     {"ack_timeout_s", 60.0},
                     {"train_timeout_s", 3600.0},
                     {"eval_timeout_s", 600.0},
                     {"pre_eval", false},
                     {"post_eval", true},
                     {"history_rounds", 1},
                     {"scheduler", algo::to_json(c.scheduler)}};
  return {{"experiment_id", id},
          {"model_config", model::to_json(cfg)},
          {"settings", {{"process", process}, {"algorithm", algorithm}, {"training", model::to_json(t)}}}};
}

// Every round must have gone through the broker: one JobRequest per round,
// delivered to each client, and an acknowledgement plus a reply from each.
void audit_messages(const InProcessFederation& fed, const ps::ExperimentRecord& rec, std::size_t n_clients) {
  auto& broker = const_cast<InProcessFederation&>(fed).broker();
  const auto& scheme = fed.scheme();
  std::size_t requests = 0;
  std::map<std::string, std::size_t> from;
  for (const auto& p : broker.publish_log()) {
    if (p.topic == scheme.job_requests()) {
      ++requests;
      if (p.deliveries != n_clients) throw std::logic_error("job request not delivered to every client");
    }
    if (p.topic.rfind(scheme.prefix() + "/job-replies/", 0) == 0) ++from[p.topic];
  }
  const std::size_t rounds = rec.rounds.size();
  if (requests != rounds) {
    throw std::logic_error(fmt::format("message audit: {} job requests for {} rounds", requests, rounds));
  }
  if (from.size() != n_clients) throw std::logic_error("message audit: not every client replied");
  for (const auto& [topic, n] : from) {
    if (n != 2 * rounds) {
      throw std::logic_error(fmt::format("message audit: {} messages on {} for {} rounds", n, topic, rounds));
    }
  }
  if (!broker.audit_log().empty()) throw std::logic_error("message audit: ACL denials during a benchmark run");
}

Stat stat_of(const std::vector<double>& v) {
  Stat s;
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  double sq = 0.0;
  for (double x : v) sq += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(v.size()));
  return s;
}

}  // namespace

std::string_view method_name(Method m) {
  for (const auto& i : kMethods) {
    if (i.method == m) return i.name;
  }
  return "?";
}

std::string_view method_label(Method m) {
  for (const auto& i : kMethods) {
    if (i.method == m) return i.label;
  }
  return "?";
}

Method method_from_name(std::string_view name) {
  for (const auto& i : kMethods) {
    if (i.name == name) return i.method;
  }
  throw std::invalid_argument("unknown method: " + std::string(name));
}

std::vector<Method> all_methods() {
  std::vector<Method> out;
  for (const auto& i : kMethods) out.push_back(i.method);
  return out;
}

std::optional<fs::path> resolve_stroke_csv(const std::optional<fs::path>& configured) {
  if (configured) return configured;
  if (const char* env = std::getenv("FEDPLAT_STROKE_CSV"); env && *env) {
    std::error_code ec;
    if (fs::is_regular_file(env, ec)) return fs::path(env);
  }
  return std::nullopt;
}

BenchResult run_comparison(const BenchConfig& config) {
  const auto csv = config.force_synthetic ? std::nullopt : resolve_stroke_csv(config.csv);
  if (csv) {
    auto spec = model::stroke_preprocess_spec();
    spec.standardize = false;  // per fold, on the training rows
    const auto data = model::load_csv_dataset(*csv, spec);
    auto r = run_comparison(config, data, "stroke-csv: " + csv->string());
    r.synthetic = false;
    return r;
  }
  const auto data = model::synth_dataset(config.seed, config.synth_samples, config.synth_prevalence,
                                         config.synth_features, {config.synth_separation});
  return run_comparison(config, data,
                        fmt::format("synthetic: {} samples, {} features, prevalence {}, separation {}, seed {}",
                                    config.synth_samples, config.synth_features, config.synth_prevalence,
                                    config.synth_separation, config.seed));
}

BenchResult run_comparison(const BenchConfig& c, const model::Dataset& data, std::string provenance) {
  if (c.n_clients < 2) throw std::invalid_argument("federated scenarios need at least two clients");
  const auto started = Clock::now();
  auto say = [&](const std::string& s) {
    if (c.progress) c.progress(s);
  };
  BenchResult out;
  out.provenance = std::move(provenance);
  out.synthetic = out.provenance.rfind("synthetic", 0) == 0;
  out.config = c;
  out.config.progress = nullptr;

  const auto split = model::split_dataset(data, 1.0 / c.folds, c.folds, c.n_clients, c.seed);
  for (int fold = 0; fold < c.folds; ++fold) {
    auto shards = split.client_shards(fold);
    auto test = split.test_set(fold);
    std::vector<const model::Dataset*> parts;
    for (const auto& s : shards) parts.push_back(&s.data);
    auto pooled = model::Dataset::concat(parts);
    // One harmonized feature scaling per fold, fitted on the training rows.
    const auto scaler = model::Standardizer::fit(pooled);
    scaler.apply(pooled);
    scaler.apply(test);
    for (auto& s : shards) scaler.apply(s.data);

    const double threshold =
        c.threshold.value_or(static_cast<double>(pooled.n_positive) / static_cast<double>(pooled.size()));
    const std::uint64_t fold_seed = c.seed * 1000 + static_cast<std::uint64_t>(fold);
    const auto cfg = model_config(c, data.n_features(), fold_seed);
    const auto init = model::build_model(cfg, fold_seed);

    for (Method m : c.methods) {
      say(fmt::format("fold {}/{}: {}", fold + 1, c.folds, method_label(m)));
      if (m == Method::local || m == Method::centralized) {
        const auto settings = training(c, c.max_epochs, fold_seed, threshold);
        std::vector<std::pair<std::string, const model::Dataset*>> jobs;
        if (m == Method::centralized) {
          jobs.push_back({"", &pooled});
        } else {
          for (std::size_t i = 0; i < shards.size(); ++i) jobs.push_back({"cn-" + std::to_string(i + 1), &shards[i].data});
        }
        for (const auto& [client, train] : jobs) {
          const auto trained = train_with_schedule(c, cfg, init, *train, settings);
          out.runs.push_back({m, fold, client, model::evaluate(cfg, trained.weights, test, threshold), trained.epochs,
                              settings.epochs, threshold});
        }
        continue;
      }

      FederationOptions opts;
      opts.prefix = "fedplat/bench";
      opts.artifact_root = c.work_dir / fmt::format("fold_{}", fold) / std::string(method_name(m));
      opts.heartbeat = std::chrono::milliseconds(5000);
      opts.grace_s = 60.0;
      opts.submit_timeout = std::chrono::milliseconds(30000);
      for (std::size_t i = 0; i < shards.size(); ++i) {
        opts.participants.push_back({"cn-" + std::to_string(i + 1),
                                     std::make_shared<cn::StaticDataLoader>(shards[i].data, shards[i].data), true});
      }
      fs::remove_all(opts.artifact_root);
      InProcessFederation fed(opts);
      fed.start();
      const auto settings = training(c, 1, fold_seed, threshold);
      const std::string id = fmt::format("{}-fold{}", method_name(m), fold);
      const auto rec = fed.run(experiment_doc(c, m, cfg, settings, id), std::chrono::hours(2));
      fed.stop();
      if (rec.status != ps::ExperimentStatus::completed && rec.status != ps::ExperimentStatus::stopped_early) {
        throw std::runtime_error(fmt::format("{} fold {} failed: {}", method_label(m), fold, rec.diagnostic));
      }
      audit_messages(fed, rec, shards.size());
      const auto final_model = fed.ps().final_model(id);
      out.runs.push_back({m, fold, "", model::evaluate(cfg, *final_model, test, threshold), rec.aggregated_rounds,
                          c.max_epochs * settings.epochs, threshold});
    }
  }
  // Equal optimisation budget across scenarios.
  for (const auto& r : out.runs) {
    if (r.budget != c.max_epochs) {
      throw std::logic_error(fmt::format("{} ran with a budget of {} epochs, expected {}", method_label(r.method),
                                         r.budget, c.max_epochs));
    }
  }
  out.rows = summarize(out.runs, c.methods);
  out.seconds = std::chrono::duration<double>(Clock::now() - started).count();
  return out;
}

std::vector<MethodRow> summarize(const std::vector<RunResult>& runs, const std::vector<Method>& methods) {
  std::vector<MethodRow> rows;
  for (Method m : methods) {
    std::vector<double> p, r, f, a;
    for (const auto& run : runs) {
      if (run.method != m) continue;
      p.push_back(run.test.precision);
      r.push_back(run.test.recall);
      f.push_back(run.test.f1);
      a.push_back(run.test.auprc);
    }
    rows.push_back({m, a.size(), stat_of(p), stat_of(r), stat_of(f), stat_of(a)});
  }
  return rows;
}

const MethodRow* find_row(const BenchResult& r, Method m) {
  for (const auto& row : r.rows) {
    if (row.method == m) return &row;
  }
  return nullptr;
}

std::string results_csv(const BenchResult& r) {
  std::ostringstream out;
  out << "method,runs,precision_mean,precision_std,recall_mean,recall_std,f1_mean,f1_std,auprc_mean,auprc_std\n";
  for (const auto& row : r.rows) {
    out << fmt::format("{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n", method_name(row.method),
                       row.runs, row.precision.mean, row.precision.std, row.recall.mean, row.recall.std, row.f1.mean,
                       row.f1.std, row.auprc.mean, row.auprc.std);
  }
  return out.str();
}

util::Json results_json(const BenchResult& r) {
  const auto& c = r.config;
  std::vector<std::string> methods;
  for (Method m : c.methods) methods.emplace_back(method_name(m));
  util::Json config{{"methods", methods},
                    {"folds", c.folds},
                    {"n_clients", c.n_clients},
                    {"seed", c.seed},
                    {"hidden_layers", c.hidden_layers},
                    {"units", c.units},
                    {"dropout", c.dropout},
                    {"max_epochs", c.max_epochs},
                    {"batch_size", c.batch_size},
                    {"learning_rate", c.learning_rate},
                    {"scheduler", algo::to_json(c.scheduler)},
                    {"fedprox_mu", c.fedprox_mu},
                    {"feddyn_mu", c.feddyn_mu}};
  if (c.threshold) config["threshold"] = *c.threshold;
  util::Json rows = util::Json::array();
  for (const auto& row : r.rows) {
    auto stat = [](const Stat& s) { return util::Json{{"mean", s.mean}, {"std", s.std}}; };
    rows.push_back({{"method", method_name(row.method)},
                    {"runs", row.runs},
                    {"precision", stat(row.precision)},
                    {"recall", stat(row.recall)},
                    {"f1", stat(row.f1)},
                    {"auprc", stat(row.auprc)}});
  }
  util::Json runs = util::Json::array();
  for (const auto& run : r.runs) {
    util::Json j{{"method", method_name(run.method)}, {"fold", run.fold},
                 {"test", model::to_json(run.test)},  {"epochs_run", run.epochs_run},
                 {"budget", run.budget},              {"threshold", run.threshold}};
    if (!run.client.empty()) j["client"] = run.client;
    runs.push_back(std::move(j));
  }
  return {{"provenance", r.provenance}, {"synthetic", r.synthetic}, {"config", config},
          {"rows", rows},               {"runs", runs},             {"seconds", r.seconds}};
}

std::string results_markdown(const BenchResult& r) {
  std::ostringstream out;
  out << "# Benchmark results\n\n";
  if (r.synthetic) {
    out << "> **Synthetic data.** No stroke CSV was supplied, so these numbers come from the imbalanced\n"
           "> synthetic fallback and are not comparable to the reference column.\n\n";
  }
  out << "Data: " << r.provenance << "  \n";
  out << fmt::format("Model: {}x{} tanh, dropout {}; up to {} epochs/rounds; {} folds, {} clients; seed {}\n\n",
                     r.config.hidden_layers, r.config.units, r.config.dropout, r.config.max_epochs, r.config.folds,
                     r.config.n_clients, r.config.seed);
  out << "| Method | Precision | Recall | F1 Score | AUPRC | Reference AUPRC |\n";
  out << "|---|---|---|---|---|---|\n";
  auto pct = [](const Stat& s) { return fmt::format("{:.2f} ± {:.2f}", 100.0 * s.mean, 100.0 * s.std); };
  for (const auto& row : r.rows) {
    const auto ref = reference_auprc(row.method);
    out << "| " << method_label(row.method) << " | " << pct(row.precision) << " | " << pct(row.recall) << " | "
        << pct(row.f1) << " | " << pct(row.auprc) << " | " << (ref ? fmt::format("{:.2f}", *ref) : "") << " |\n";
  }
  out << fmt::format("\nValues in percent, mean ± standard deviation over runs. Runtime {:.0f} s.\n", r.seconds);
  return out.str();
}

void write_results(const BenchResult& r, const fs::path& dir) {
  fs::create_directories(dir);
  proto::write_file_atomic(dir / "results.csv", results_csv(r));
  proto::write_file_atomic(dir / "results.json", results_json(r).dump(2) + "\n");
  proto::write_file_atomic(dir / "results.md", results_markdown(r));
}

}  // namespace fedplat::bench
