// Runs every node of a federation file in one process over the embedded
// broker, with the control center's HTTP API. Also prints broker ACLs for
// external deployments.
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "fedplat/cc/http_api.hpp"
#include "fedplat/proto/embedded_broker.hpp"
#include "tool_support.hpp"

using namespace fedplat;
using util::Json;

namespace {

int run(const std::filesystem::path& config, const std::filesystem::path& submit, bool serve_http,
        double timeout_s) {
  const auto signals = tools::block_shutdown_signals();
  const auto f = deploy::load_federation(config);
  std::set<std::string> known;
  for (const auto& n : f.nodes) known.insert(n.client_id);
  proto::EmbeddedBroker broker(deploy::acl_rules(f), known);

  ps::ParameterServer server(deploy::ps_config(f), broker.connect(f.parameter_server().client_id));
  std::vector<std::unique_ptr<cn::ClientNode>> clients;
  const deploy::NodeEntry* cc_node = nullptr;
  for (const auto& n : f.nodes) {
    if (n.role == proto::Role::client_participant || n.role == proto::Role::client_observer) {
      clients.push_back(std::make_unique<cn::ClientNode>(deploy::client_config(f, n.client_id), broker.connect(n.client_id)));
    }
    if (n.role == proto::Role::control_center && !cc_node) cc_node = &n;
  }
  if (!cc_node) throw std::runtime_error("the federation file has no control_center node");
  cc::ControlCenter center(deploy::cc_config(f, cc_node->client_id), broker.connect(cc_node->client_id));

  server.start();
  for (auto& c : clients) c->start();
  center.start();
  std::unique_ptr<cc::HttpApi> api;
  if (serve_http) {
    api = std::make_unique<cc::HttpApi>(center, f.artifacts_for(*cc_node));
    const int port = api->start(cc_node->http_host, cc_node->http_port);
    std::cout << "control center API on " << cc_node->http_host << ":" << port << std::endl;
  }

  int rc = 0;
  if (!submit.empty()) {
    std::ifstream in(submit);
    const auto doc = Json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw std::runtime_error(submit.string() + " is not JSON");
    const auto r = center.submit(doc);
    if (r.outcome != cc::SubmitOutcome::accepted) {
      std::cerr << "fedsim: experiment not accepted: " << r.reason << "\n";
      for (const auto& e : r.errors) std::cerr << "  " << e.path << ": " << e.message << "\n";
      rc = 2;
    } else {
      std::cout << "experiment " << r.experiment_id << " accepted" << std::endl;
      const auto rec = server.wait_for_completion(
          r.experiment_id, std::chrono::milliseconds(static_cast<long long>(timeout_s * 1000)));
      if (!rec || rec->status == ps::ExperimentStatus::running) {
        std::cerr << "fedsim: experiment still running after " << timeout_s << " s\n";
        rc = 1;
      } else {
        for (const auto& round : rec->rounds) {
          std::cout << "round " << round.round << ": " << ps::round_outcome_name(round.outcome);
          if (round.weighted_post_eval) {
            std::cout << "  loss " << round.weighted_post_eval->loss << "  auprc " << round.weighted_post_eval->auprc;
          }
          std::cout << "\n";
        }
        std::cout << "status " << ps::experiment_status_name(rec->status);
        if (rec->final_round) std::cout << ", final model from round " << *rec->final_round;
        if (!rec->diagnostic.empty()) std::cout << " (" << rec->diagnostic << ")";
        std::cout << "\nartifacts in " << server.experiment_dir(r.experiment_id).string() << "\n";
        rc = rec->status == ps::ExperimentStatus::failed ? 1 : 0;
      }
    }
    if (!serve_http) {
      center.stop();
      for (auto& c : clients) c->stop();
      server.stop();
      return rc;
    }
  }
  tools::wait_for_shutdown(signals);
  if (api) api->stop();
  center.stop();
  for (auto& c : clients) c->stop();
  server.stop();
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fedsim: a whole federation in one process"};
  app.require_subcommand(1);
  std::string level = "info";
  app.add_option("--log-level", level);

  std::filesystem::path config;
  auto* run_cmd = app.add_subcommand("run", "start all nodes over the embedded broker");
  std::filesystem::path submit;
  bool http = false;
  double timeout_s = 3600.0;
  run_cmd->add_option("-c,--config", config, "federation file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--submit", submit, "submit this experiment request, wait for it and exit")
      ->check(CLI::ExistingFile);
  run_cmd->add_flag("--http", http, "serve the control center API (keeps running after --submit)");
  run_cmd->add_option("--timeout", timeout_s, "seconds to wait for a submitted experiment");

  auto* acl_cmd = app.add_subcommand("acl", "print mosquitto-style ACLs for the federation");
  acl_cmd->add_option("-c,--config", config, "federation file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  tools::set_log_level(level);
  try {
    if (*acl_cmd) {
      std::cout << deploy::mosquitto_acl(deploy::load_federation(config));
      return 0;
    }
    if (submit.empty()) http = true;
    return run(config, submit, http, timeout_s);
  } catch (const util::ValidationError& e) {
    std::cerr << "fedsim: invalid federation file\n";
    tools::print_validation(e);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "fedsim: " << e.what() << "\n";
    return 1;
  }
}
