#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fedplat/algo/scheduler.hpp"
#include "fedplat/model/dataset.hpp"
#include "fedplat/model/metrics.hpp"

namespace fedplat::bench {

enum class Method { local, centralized, fedavg, fedprox, feddyn, scaffold };

std::string_view method_name(Method m);  // "local", ...
std::string_view method_label(Method m);  // "Local", "FedAvg", ...
Method method_from_name(std::string_view name);  // throws std::invalid_argument
std::vector<Method> all_methods();

struct BenchConfig {
  std::optional<std::filesystem::path> csv;  // stroke table; synthetic data otherwise
  bool force_synthetic = false;              // ignore csv and $FEDPLAT_STROKE_CSV
  std::vector<Method> methods = all_methods();
  int folds = 5;
  std::size_t n_clients = 3;
  std::uint64_t seed = 42;

  // Model and schedule.
  std::size_t hidden_layers = 2;
  std::size_t units = 64;
  double dropout = 0.5;
  std::size_t max_epochs = 128;  // epochs, or rounds of one local epoch
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  algo::SchedulerConfig scheduler{true, 16, 0.5, 1e-4, 48, algo::Direction::minimize};
  double fedprox_mu = 0.01;
  double feddyn_mu = 0.01;
  // Decision threshold for precision/recall/F1. Unset: the fold's training
  // prevalence.
  std::optional<double> threshold;

  // Synthetic fallback.
  std::size_t synth_samples = 5110;
  double synth_prevalence = 0.05;
  std::size_t synth_features = 10;
  double synth_separation = 1.0;

  std::filesystem::path work_dir = "artifacts/bench";
  std::function<void(const std::string&)> progress;
};

// The configured path, else $FEDPLAT_STROKE_CSV when it names a file.
std::optional<std::filesystem::path> resolve_stroke_csv(const std::optional<std::filesystem::path>& configured);

struct RunResult {
  Method method = Method::local;
  int fold = 0;
  std::string client;  // local runs only
  model::EvalMetrics test;
  std::size_t epochs_run = 0;  // epochs or aggregated rounds
  std::size_t budget = 0;      // maximum epochs of local optimisation
  double threshold = 0.5;
};

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

struct MethodRow {
  Method method = Method::local;
  std::size_t runs = 0;
  Stat precision, recall, f1, auprc;
};

struct BenchResult {
  std::string provenance;  // "stroke-csv: <path>" or "synthetic: ..."
  bool synthetic = true;
  BenchConfig config;
  std::vector<RunResult> runs;
  std::vector<MethodRow> rows;
  double seconds = 0.0;
};

// Local, centralized and federated scenarios over k-fold splits. Federated
// scenarios run the full platform in process. Throws std::logic_error when
// the step budgets differ or the message audit of a federated run fails.
BenchResult run_comparison(const BenchConfig& config);
BenchResult run_comparison(const BenchConfig& config, const model::Dataset& data, std::string provenance);

std::vector<MethodRow> summarize(const std::vector<RunResult>& runs, const std::vector<Method>& methods);
const MethodRow* find_row(const BenchResult& r, Method m);

std::string results_csv(const BenchResult& r);
util::Json results_json(const BenchResult& r);
std::string results_markdown(const BenchResult& r);
// results.csv, results.json and results.md in `dir`.
void write_results(const BenchResult& r, const std::filesystem::path& dir);

}  // namespace fedplat::bench
