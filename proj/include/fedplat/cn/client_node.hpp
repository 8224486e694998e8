#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stop_token>
#include <string>
#include <thread>

#include "fedplat/algo/algorithms.hpp"
#include "fedplat/cn/data_loader.hpp"
#include "fedplat/proto/broker.hpp"
#include "fedplat/proto/envelope.hpp"
#include "fedplat/proto/messages.hpp"
#include "fedplat/proto/status.hpp"
#include "fedplat/proto/topics.hpp"

namespace fedplat::cn {

struct ClientConfig {
  std::string client_id;
  proto::Role role = proto::Role::client_participant;  // or client_observer
  std::string prefix = "fedplat/federation/default";
  std::filesystem::path artifact_root = "artifacts";
  bool allow_metrics_upload = true;
  std::shared_ptr<DataLoader> data;
  std::chrono::milliseconds heartbeat{5000};
};

struct ClientCounters {
  std::size_t job_requests = 0;
  std::size_t acks = 0;
  std::size_t replies = 0;
  std::size_t failures = 0;
  std::size_t aborted = 0;
  std::size_t busy_ignored = 0;
  std::size_t model_replies = 0;
};

// Institution-side agent. Deliveries are handled on an intake thread; a job
// runs on a worker that checks for cancellation between batches.
class ClientNode {
 public:
  ClientNode(ClientConfig config, std::unique_ptr<proto::Session> session);
  ~ClientNode();

  ClientNode(const ClientNode&) = delete;
  ClientNode& operator=(const ClientNode&) = delete;

  void start();
  void stop();

  void request_model(const std::string& experiment_id);
  // The first ModelReply for the experiment, or nullopt on timeout.
  std::optional<proto::ModelReply> wait_for_model(const std::string& experiment_id,
                                                  std::chrono::milliseconds timeout) const;
  // Blocks until no job is running.
  bool wait_idle(std::chrono::milliseconds timeout) const;

  const std::string& client_id() const { return config_.client_id; }
  proto::NodeState state() const;
  proto::StatusReport status() const;
  ClientCounters counters() const;
  std::filesystem::path experiment_dir(const std::string& experiment_id) const;

 private:
  struct Job {
    std::string experiment_id;
    std::size_t round = 0;
    proto::JobRequest request;
    std::chrono::steady_clock::time_point received;
  };

  void intake();
  void handle(const proto::Message& msg);
  void handle_job_request(const proto::Envelope& e);
  void handle_job_abort(const proto::Envelope& e);
  void handle_model_reply(const proto::Envelope& e);
  void run_job(std::stop_token stop, Job job);
  std::optional<model::EvalMetrics> try_evaluate(const Job& job, const model::ModelWeights& weights,
                                                 const char* phase);
  // Publishes unless the job was cancelled; the check and the publish are
  // atomic with respect to aborts.
  bool publish_unless_cancelled(const std::stop_token& stop, proto::MsgType type, const Job& job,
                                util::Json payload);
  void append_metrics(const std::string& experiment_id, const util::Json& line);
  void finish_job(proto::NodeState state, const Job& job, const std::string& diagnostic);

  ClientConfig config_;
  proto::TopicScheme scheme_;
  std::unique_ptr<proto::Session> session_;
  std::unique_ptr<proto::StatusPublisher> status_;
  std::thread intake_;
  std::atomic<bool> stopping_{false};

  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::jthread worker_;
  std::optional<std::pair<std::string, std::size_t>> active_;  // (experiment, round)
  std::mutex publish_mu_;
  std::string alg_experiment_;
  algo::ClientAlgState alg_state_;
  ClientCounters counters_;
  std::map<std::string, proto::ModelReply> models_;
  std::set<proto::DedupeKey> seen_models_;
};

}  // namespace fedplat::cn
