// Benchmark driver: local, centralized and federated training on the stroke
// table (or the synthetic fallback) with k-fold cross-validation.
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "fedplat/bench/benchmark.hpp"

using namespace fedplat;

int main(int argc, char** argv) {
  CLI::App app{"fedbench: compare local, centralized and federated training"};
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "run the comparison and write results.{csv,json,md}");

  bench::BenchConfig c;
  std::string data = "auto";
  std::vector<std::string> methods;
  std::filesystem::path out = "results";
  double threshold = -1.0;
  bool verbose = false;
  run->add_option("--data", data, "stroke CSV path, 'synthetic', or 'auto' ($FEDPLAT_STROKE_CSV if set)");
  run->add_option("--methods", methods, "subset of local,centralized,fedavg,fedprox,feddyn,scaffold")->delimiter(',');
  run->add_option("--folds", c.folds)->check(CLI::Range(2, 20));
  run->add_option("--clients", c.n_clients)->check(CLI::Range(2, 32));
  run->add_option("--seed", c.seed);
  run->add_option("--epochs", c.max_epochs, "epochs, or rounds of one local epoch")->check(CLI::PositiveNumber);
  run->add_option("--hidden-layers", c.hidden_layers);
  run->add_option("--units", c.units)->check(CLI::PositiveNumber);
  run->add_option("--dropout", c.dropout)->check(CLI::Range(0.0, 0.99));
  run->add_option("--batch-size", c.batch_size)->check(CLI::PositiveNumber);
  run->add_option("--lr", c.learning_rate)->check(CLI::PositiveNumber);
  run->add_option("--fedprox-mu", c.fedprox_mu);
  run->add_option("--feddyn-mu", c.feddyn_mu);
  run->add_option("--threshold", threshold, "decision threshold (default: training prevalence)");
  run->add_flag("--no-scheduler", [&](std::int64_t) { c.scheduler.enabled = false; });
  run->add_option("--synth-samples", c.synth_samples);
  run->add_option("--synth-separation", c.synth_separation);
  run->add_option("--work-dir", c.work_dir, "federation artifacts");
  run->add_option("--out", out);
  run->add_flag("-v,--verbose", verbose, "platform logs");

  CLI11_PARSE(app, argc, argv);

  spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);
  try {
    if (data == "synthetic") {
      c.force_synthetic = true;
    } else if (data != "auto") {
      c.csv = data;
    }
    if (!methods.empty()) {
      c.methods.clear();
      for (const auto& m : methods) c.methods.push_back(bench::method_from_name(m));
    }
    if (threshold >= 0.0) c.threshold = threshold;
    c.progress = [](const std::string& s) { std::cerr << s << "\n"; };

    const auto r = bench::run_comparison(c);
    bench::write_results(r, out);
    std::cout << bench::results_markdown(r);
    std::cout << "written to " << out.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "fedbench: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
