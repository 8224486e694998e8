#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "fedplat/proto/acl.hpp"
#include "fedplat/proto/broker.hpp"
#include "fedplat/proto/envelope.hpp"
#include "fedplat/proto/messages.hpp"
#include "fedplat/proto/topics.hpp"
#include "fedplat/schema/experiment.hpp"

namespace fedplat::cc {

using util::Json;

struct CcConfig {
  std::string client_id = "control-center";
  std::string prefix = "fedplat/federation/default";
  // Known nodes. Status from anyone else is listed with role "unknown".
  std::map<std::string, proto::Role> registry;
  std::chrono::milliseconds heartbeat{5000};  // of the monitored nodes
  std::chrono::milliseconds submit_timeout{10000};
  std::chrono::milliseconds model_timeout{10000};
};

struct NodeView {
  std::string client_id;
  std::string role;  // role name, or "unknown"
  std::string state;  // empty until the first report
  std::string experiment_id;
  std::size_t round = 0;
  std::string last_seen;  // report timestamp
  std::string diagnostic;
  bool stale = true;
  bool unknown = false;  // not in the registry, or reporting a different role
  Json detail = Json::object();
};

struct NetworkView {
  std::string generated_at;
  std::vector<NodeView> nodes;  // by client_id
};

struct ExperimentSummary {
  std::string experiment_id;
  std::string status;  // submitted, running, completed, stopped_early, failed, rejected
  std::size_t rounds_total = 0;
  std::size_t current_round = 0;
  std::vector<Json> rounds;  // per-round entries seen in PS status, by round
  Json last_metrics = nullptr;
  std::optional<std::size_t> final_round;
  std::string diagnostic;
  std::string submitted_at;
};

Json to_json(const NodeView& n);
Json to_json(const NetworkView& v);
Json to_json(const ExperimentSummary& s);

enum class SubmitOutcome { accepted, invalid, busy, rejected, timeout };

struct SubmitResult {
  SubmitOutcome outcome = SubmitOutcome::timeout;
  std::string experiment_id;
  std::vector<util::FieldError> errors;  // invalid / rejected
  std::string reason;
};

class CcError : public std::runtime_error {
 public:
  enum class Kind { not_finalized, unknown_experiment, timeout, io };
  CcError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Administrative node. One intake thread consumes the broker session and
// keeps the network and experiment views; readers take snapshots.
class ControlCenter {
 public:
  ControlCenter(CcConfig config, std::unique_ptr<proto::Session> session);
  ~ControlCenter();

  ControlCenter(const ControlCenter&) = delete;
  ControlCenter& operator=(const ControlCenter&) = delete;

  void start();
  void stop();

  const CcConfig& config() const { return config_; }

  // input = {model_config, settings, experiment_id?}. Pure.
  schema::ValidationReport validate(const Json& input) const;
  // Validates locally, assigns an id when none is given and waits for the
  // parameter server's answer. One submission at a time.
  SubmitResult submit(const Json& input);

  NetworkView network() const;
  std::vector<ExperimentSummary> experiments() const;
  std::optional<ExperimentSummary> experiment(const std::string& id) const;

  // Fetches the final model over the broker and writes it atomically.
  // Returns the round the model comes from. Throws CcError.
  std::size_t request_final_model(const std::string& id, const std::filesystem::path& destination);

  // Blocks until the experiment leaves submitted/running.
  std::optional<ExperimentSummary> wait_for_experiment(const std::string& id, std::chrono::milliseconds timeout) const;

 private:
  void intake();
  void handle(const proto::Message& msg);
  void handle_status(const std::string& node, const proto::Message& msg);
  void update_experiment_from_ps(const proto::StatusReport& r);

  CcConfig config_;
  proto::TopicScheme scheme_;
  std::unique_ptr<proto::Session> session_;
  std::thread intake_;
  std::atomic<bool> stopping_{false};

  std::mutex submit_mu_;
  std::mutex model_mu_;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::map<std::string, proto::StatusReport> reports_;
  std::map<std::string, ExperimentSummary> experiments_;
  std::map<std::string, proto::Envelope> ps_replies_;
  std::map<std::string, proto::ModelReply> model_replies_;
};

}  // namespace fedplat::cc
