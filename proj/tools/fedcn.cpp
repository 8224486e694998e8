// Client node daemon: participant or observer, selected by the federation file.
#include <CLI11.hpp>

#include "fedplat/cn/client_node.hpp"
#include "tool_support.hpp"

using namespace fedplat;

int main(int argc, char** argv) {
  CLI::App app{"fedcn: client node"};
  std::filesystem::path config;
  std::string id;
  std::string level = "info";
  std::string fetch;
  app.add_option("-c,--config", config, "federation file")->required()->check(CLI::ExistingFile);
  app.add_option("--id", id, "own client id in the federation file")->required();
  app.add_option("--fetch-model", fetch, "request the final model of an experiment, wait for it and exit");
  app.add_option("--log-level", level);
  CLI11_PARSE(app, argc, argv);

  const auto signals = tools::block_shutdown_signals();
  tools::set_log_level(level);
  try {
    const auto f = deploy::load_federation(config);
    auto broker = tools::external_broker(f);
    cn::ClientNode node(deploy::client_config(f, id), broker->connect(id));
    node.start();
    if (!fetch.empty()) {
      node.request_model(fetch);
      const auto reply = node.wait_for_model(fetch, std::chrono::seconds(30));
      node.stop();
      if (!reply) {
        std::cerr << "fedcn: no model reply for " << fetch << "\n";
        return 1;
      }
      if (reply->error) {
        std::cerr << "fedcn: " << *reply->error << "\n";
        return 1;
      }
      std::cout << (node.experiment_dir(fetch) / "final.weights").string() << "\n";
      return 0;
    }
    spdlog::info("client '{}' ({}) on prefix {}", id, proto::role_name(f.node(id).role), f.prefix);
    tools::wait_for_shutdown(signals);
    node.stop();
  } catch (const util::ValidationError& e) {
    std::cerr << "fedcn: invalid federation file\n";
    tools::print_validation(e);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "fedcn: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
