#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <thread>

#include "fedplat/cc/control_center.hpp"

namespace httplib {
class Server;
}

namespace fedplat::cc {

// JSON API over a ControlCenter. Handlers run concurrently and only read
// snapshots of the control center's view.
class HttpApi {
 public:
  HttpApi(ControlCenter& cc, std::filesystem::path artifact_root);
  ~HttpApi();

  HttpApi(const HttpApi&) = delete;
  HttpApi& operator=(const HttpApi&) = delete;

  // Starts serving in the background. Port 0 picks a free port; returns the
  // bound port. Throws std::runtime_error when the address cannot be bound.
  int start(const std::string& host, int port);
  void stop();

 private:
  ControlCenter& cc_;
  std::filesystem::path artifact_root_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace fedplat::cc
