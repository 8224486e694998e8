#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "fedplat/algo/algorithms.hpp"
#include "fedplat/algo/scheduler.hpp"
#include "fedplat/model/metrics.hpp"
#include "fedplat/proto/broker.hpp"
#include "fedplat/proto/envelope.hpp"
#include "fedplat/proto/status.hpp"
#include "fedplat/proto/topics.hpp"
#include "fedplat/schema/experiment.hpp"

namespace fedplat::ps {

using model::ModelWeights;

struct PsConfig {
  std::string prefix = "fedplat/federation/default";
  std::filesystem::path artifact_root = "artifacts";
  std::vector<std::string> participants;  // registered participant client ids
  std::vector<std::string> observers;
  std::chrono::milliseconds heartbeat{5000};
  double grace_s = 10.0;  // added to the round deadline
};

enum class ExperimentStatus { running, completed, stopped_early, failed };
std::string_view experiment_status_name(ExperimentStatus s);

enum class RoundOutcome { aggregated, skipped_acks, skipped_replies };
std::string_view round_outcome_name(RoundOutcome o);

struct RoundReport {
  std::string experiment_id;
  std::size_t round = 0;
  RoundOutcome outcome = RoundOutcome::skipped_acks;
  std::set<std::string> acks;
  std::set<std::string> replies;
  std::set<std::string> failures;
  double learning_rate = 0.0;  // rate sent with this round's JobRequest
  std::optional<model::EvalMetrics> weighted_post_eval;
  std::optional<model::EvalMetrics> weighted_pre_eval;
  ModelWeights global;  // after the round
  bool early_stop = false;
};

struct ExperimentRecord {
  schema::ExperimentSpec spec;
  ExperimentStatus status = ExperimentStatus::running;
  std::vector<RoundReport> rounds;  // without weights, to keep the record small
  std::size_t aggregated_rounds = 0;
  std::optional<std::size_t> best_round;
  std::optional<std::size_t> final_round;
  std::string diagnostic;
};

// Coordinates one federation: accepts experiments from the control center and
// runs them round by round. All protocol handling happens on one loop thread
// that owns the session's delivery stream, so state transitions are
// serialized.
class ParameterServer {
 public:
  ParameterServer(PsConfig config, std::unique_ptr<proto::Session> session);
  ~ParameterServer();

  ParameterServer(const ParameterServer&) = delete;
  ParameterServer& operator=(const ParameterServer&) = delete;

  void start();
  void stop();

  // Called on the loop thread after every round.
  void on_round(std::function<void(const RoundReport&)> callback);

  bool busy() const;
  std::optional<ExperimentRecord> experiment(const std::string& id) const;
  std::optional<ModelWeights> final_model(const std::string& id) const;
  // Waits until the experiment leaves the running state.
  std::optional<ExperimentRecord> wait_for_completion(const std::string& id,
                                                      std::chrono::milliseconds timeout) const;
  std::filesystem::path experiment_dir(const std::string& id) const;

 private:
  struct Round;
  struct Running;

  void loop();
  void handle_idle(const proto::Message& msg);
  void handle_experiment_request(const proto::Envelope& e);
  void handle_model_request(const std::string& client, const proto::Envelope& e);
  void run_experiment(schema::ExperimentSpec spec);
  RoundReport run_round(Running& run, std::size_t round);
  void finish(Running& run, ExperimentStatus status, const std::string& diagnostic);
  void handle_during_round(Running& run, Round& round, const proto::Message& msg);
  void log_stale(Running* run, const std::string& what);
  bool receive_until(std::chrono::steady_clock::time_point deadline,
                     const std::function<void(const proto::Message&)>& handler,
                     const std::function<bool()>& done);
  void send(proto::MsgType type, const std::string& topic, const std::string& experiment_id,
            std::size_t round, util::Json payload);
  void event(Running& run, const std::string& line);

  PsConfig config_;
  proto::TopicScheme scheme_;
  std::unique_ptr<proto::Session> session_;
  std::unique_ptr<proto::StatusPublisher> status_;
  std::thread thread_;
  std::atomic<bool> stopping_{false};

  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::map<std::string, ExperimentRecord> records_;
  std::map<std::string, ModelWeights> finals_;
  std::optional<std::string> running_id_;
  std::function<void(const RoundReport&)> on_round_;
};

}  // namespace fedplat::ps
