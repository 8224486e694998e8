#pragma once

#include <csignal>
#include <iostream>
#include <memory>
#include <string>

#include <spdlog/spdlog.h>

#include "fedplat/deploy/federation_file.hpp"
#include "fedplat/proto/mqtt_client.hpp"

namespace fedplat::tools {

// Blocks SIGINT and SIGTERM for every thread started afterwards; call first
// in main, then wait_for_shutdown() once the node is running.
inline sigset_t block_shutdown_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  return set;
}

inline void wait_for_shutdown(const sigset_t& set) {
  int sig = 0;
  sigwait(&set, &sig);
  spdlog::info("shutting down (signal {})", sig);
}

inline void set_log_level(const std::string& level) {
  spdlog::set_level(spdlog::level::from_str(level));
}

inline std::unique_ptr<proto::Broker> external_broker(const deploy::FederationFile& f) {
  if (!f.broker) {
    throw std::runtime_error("the federation file uses the embedded broker; run it with fedsim");
  }
  return std::make_unique<proto::MqttBroker>(*f.broker);
}

inline void print_validation(const util::ValidationError& e) {
  for (const auto& err : e.errors()) {
    std::cerr << "  " << (err.path.empty() ? "(root)" : err.path) << ": " << err.message << "\n";
  }
}

}  // namespace fedplat::tools
