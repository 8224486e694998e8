#pragma once

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <thread>

#include "fedplat/proto/broker.hpp"
#include "fedplat/proto/messages.hpp"
#include "fedplat/proto/topics.hpp"

namespace fedplat::proto {

// Publishes a node's retained StatusReport on every change and again on each
// heartbeat tick, with a fresh timestamp.
class StatusPublisher {
 public:
  StatusPublisher(Session& session, const TopicScheme& scheme, Role role,
                  std::chrono::milliseconds heartbeat);
  ~StatusPublisher();

  StatusPublisher(const StatusPublisher&) = delete;
  StatusPublisher& operator=(const StatusPublisher&) = delete;

  void start();  // first report plus heartbeat thread
  void stop();

  void update(NodeState state, std::string experiment_id, std::size_t round,
              std::string diagnostic = {}, Json detail = Json::object());
  StatusReport current() const;

 private:
  void publish_locked();

  Session& session_;
  std::string topic_;
  std::chrono::milliseconds heartbeat_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  StatusReport report_;
  bool running_ = false;
  std::thread thread_;
};

}  // namespace fedplat::proto
