// Parameter server daemon for a federation reached through an MQTT broker.
#include <CLI11.hpp>

#include "fedplat/ps/parameter_server.hpp"
#include "tool_support.hpp"

using namespace fedplat;

int main(int argc, char** argv) {
  CLI::App app{"fedps: parameter server"};
  std::filesystem::path config;
  std::string level = "info";
  app.add_option("-c,--config", config, "federation file")->required()->check(CLI::ExistingFile);
  app.add_option("--log-level", level);
  CLI11_PARSE(app, argc, argv);

  const auto signals = tools::block_shutdown_signals();
  tools::set_log_level(level);
  try {
    const auto f = deploy::load_federation(config);
    auto broker = tools::external_broker(f);
    const auto cfg = deploy::ps_config(f);
    ps::ParameterServer server(cfg, broker->connect(f.parameter_server().client_id));
    server.start();
    spdlog::info("parameter server '{}' on prefix {} with {} participant(s)", f.parameter_server().client_id,
                 f.prefix, cfg.participants.size());
    tools::wait_for_shutdown(signals);
    server.stop();
  } catch (const util::ValidationError& e) {
    std::cerr << "fedps: invalid federation file\n";
    tools::print_validation(e);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "fedps: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
