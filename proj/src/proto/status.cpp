#include "fedplat/proto/status.hpp"

#include <spdlog/spdlog.h>

#include "fedplat/proto/envelope.hpp"
#include "fedplat/util/clock.hpp"

namespace fedplat::proto {

StatusPublisher::StatusPublisher(Session& session, const TopicScheme& scheme, Role role,
                                 std::chrono::milliseconds heartbeat)
    : session_(session), topic_(scheme.status_reports(session.client_id())), heartbeat_(heartbeat) {
  report_.node_id = session.client_id();
  report_.role = role;
}

StatusPublisher::~StatusPublisher() { stop(); }

void StatusPublisher::start() {
  std::lock_guard lock(mu_);
  if (running_) return;
  running_ = true;
  publish_locked();
  thread_ = std::thread([this] {
    std::unique_lock lock(mu_);
    while (running_) {
      if (!cv_.wait_for(lock, heartbeat_, [&] { return !running_; })) publish_locked();
    }
  });
}

void StatusPublisher::stop() {
  {
    std::lock_guard lock(mu_);
    if (!running_) return;
    running_ = false;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

void StatusPublisher::update(NodeState state, std::string experiment_id, std::size_t round,
                             std::string diagnostic, Json detail) {
  std::lock_guard lock(mu_);
  report_.state = state;
  report_.experiment_id = std::move(experiment_id);
  report_.round = round;
  report_.diagnostic = std::move(diagnostic);
  report_.detail = std::move(detail);
  if (running_) publish_locked();
}

StatusReport StatusPublisher::current() const {
  std::lock_guard lock(mu_);
  return report_;
}

void StatusPublisher::publish_locked() {
  report_.timestamp = util::now_utc();
  try {
    const Envelope e = make_envelope(MsgType::status_report, report_.experiment_id, report_.round,
                                     report_.node_id, to_json(report_));
    session_.publish(topic_, serialize(e), true);
  } catch (const std::exception& ex) {
    spdlog::warn("{}: status publish failed: {}", report_.node_id, ex.what());
  }
}

}  // namespace fedplat::proto
