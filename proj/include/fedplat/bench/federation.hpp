#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fedplat/cc/control_center.hpp"
#include "fedplat/cn/client_node.hpp"
#include "fedplat/proto/embedded_broker.hpp"
#include "fedplat/ps/parameter_server.hpp"

namespace fedplat::bench {

struct ParticipantSpec {
  std::string client_id;
  // Null registers the id without starting a node; the caller may drive it
  // through connect_as().
  std::shared_ptr<cn::DataLoader> data;
  bool allow_metrics_upload = true;
};

struct FederationOptions {
  std::string prefix = "fedplat/sim";
  std::filesystem::path artifact_root = "artifacts/sim";
  std::vector<ParticipantSpec> participants;
  std::optional<ParticipantSpec> observer;
  std::string ps_id = "ps";
  std::string cc_id = "cc";
  std::chrono::milliseconds heartbeat{1000};
  double grace_s = 1.0;
  std::chrono::milliseconds submit_timeout{5000};
};

// PS, client nodes, observer and CC wired over one embedded broker with the
// standard role ACL. Every actor uses the real message path.
class InProcessFederation {
 public:
  explicit InProcessFederation(FederationOptions options);
  ~InProcessFederation();

  void start();
  void stop();

  proto::EmbeddedBroker& broker() { return *broker_; }
  ps::ParameterServer& ps() { return *ps_; }
  cc::ControlCenter& cc() { return *cc_; }
  cn::ClientNode& client(const std::string& id);
  cn::ClientNode* observer() { return observer_.get(); }
  const FederationOptions& options() const { return options_; }
  const proto::TopicScheme& scheme() const { return scheme_; }

  // Extra session for a registered id that has no node running.
  std::unique_ptr<proto::Session> connect_as(const std::string& client_id);

  // Submits through the CC and waits for the PS to finish. Throws
  // std::runtime_error when the submission is not accepted or the run does
  // not finish in time.
  ps::ExperimentRecord run(const util::Json& experiment, std::chrono::milliseconds timeout);

 private:
  FederationOptions options_;
  proto::TopicScheme scheme_;
  std::unique_ptr<proto::EmbeddedBroker> broker_;
  std::unique_ptr<ps::ParameterServer> ps_;
  std::vector<std::unique_ptr<cn::ClientNode>> clients_;
  std::unique_ptr<cn::ClientNode> observer_;
  std::unique_ptr<cc::ControlCenter> cc_;
  bool started_ = false;
};

}  // namespace fedplat::bench
