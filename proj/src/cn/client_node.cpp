#include "fedplat/cn/client_node.hpp"

#include <fstream>

#include <spdlog/spdlog.h>

#include "fedplat/model/metrics.hpp"
#include "fedplat/model/train.hpp"
#include "fedplat/proto/codec.hpp"
#include "fedplat/util/clock.hpp"

namespace fedplat::cn {

namespace fs = std::filesystem;
using proto::Envelope;
using proto::MsgType;
using proto::NodeState;
using Clock = std::chrono::steady_clock;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Distinct, reproducible shuffling and dropout streams per (seed, round, client).
std::uint64_t job_seed(std::uint64_t base, std::size_t round, const std::string& client) {
  return splitmix64(splitmix64(base ^ splitmix64(round)) ^ fnv1a(client));
}

}  // namespace

ClientNode::ClientNode(ClientConfig config, std::unique_ptr<proto::Session> session)
    : config_(std::move(config)), scheme_(config_.prefix), session_(std::move(session)) {
  if (config_.role != proto::Role::client_participant && config_.role != proto::Role::client_observer) {
    throw std::invalid_argument("client node role must be participant or observer");
  }
  if (!config_.data) throw std::invalid_argument("client node needs a data loader");
  if (config_.role == proto::Role::client_participant && !config_.data->has_train()) {
    throw std::invalid_argument("participant " + config_.client_id + " has no training data");
  }
  status_ = std::make_unique<proto::StatusPublisher>(*session_, scheme_, config_.role, config_.heartbeat);
}

ClientNode::~ClientNode() { stop(); }

void ClientNode::start() {
  std::vector<std::string> filters{scheme_.model_replies(), scheme_.model_replies(config_.client_id)};
  if (config_.role == proto::Role::client_participant) filters.push_back(scheme_.job_requests());
  for (const auto& f : filters) {
    if (!session_->subscribe(f)) throw proto::BrokerError("subscription refused: " + f);
  }
  status_->start();
  intake_ = std::thread([this] { intake(); });
}

void ClientNode::stop() {
  if (stopping_.exchange(true)) return;
  if (intake_.joinable()) intake_.join();
  if (worker_.joinable()) {
    worker_.request_stop();
    worker_.join();
  }
  status_->stop();
  session_->close();
  cv_.notify_all();
}

fs::path ClientNode::experiment_dir(const std::string& experiment_id) const {
  return config_.artifact_root / "experiments" / experiment_id;
}

NodeState ClientNode::state() const { return status_->current().state; }

proto::StatusReport ClientNode::status() const { return status_->current(); }

ClientCounters ClientNode::counters() const {
  std::lock_guard lock(mu_);
  return counters_;
}

bool ClientNode::wait_idle(std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  return cv_.wait_for(lock, timeout, [&] { return !active_.has_value(); });
}

std::optional<proto::ModelReply> ClientNode::wait_for_model(const std::string& experiment_id,
                                                            std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return models_.contains(experiment_id) || stopping_; });
  auto it = models_.find(experiment_id);
  if (it == models_.end()) return std::nullopt;
  return it->second;
}

void ClientNode::request_model(const std::string& experiment_id) {
  const Envelope e = proto::make_envelope(MsgType::model_request, experiment_id, 0, config_.client_id,
                                          util::Json::object());
  session_->publish(scheme_.model_requests(config_.client_id), proto::serialize(e), false);
}

void ClientNode::intake() {
  while (!stopping_) {
    const auto deadline = Clock::now() + std::chrono::milliseconds(100);
    auto msg = session_->receive(deadline);
    if (!msg) {
      std::this_thread::sleep_until(deadline);
      continue;
    }
    try {
      handle(*msg);
    } catch (const std::exception& ex) {
      spdlog::error("cn {}: {}", config_.client_id, ex.what());
    }
  }
}

void ClientNode::handle(const proto::Message& msg) {
  Envelope e;
  try {
    e = proto::parse_envelope(msg.payload);
  } catch (const proto::ProtocolError& ex) {
    spdlog::warn("cn {}: undecodable message on {}: {}", config_.client_id, msg.topic, ex.what());
    return;
  }
  if (msg.topic == scheme_.job_requests()) {
    if (e.msg_type == MsgType::job_request) {
      handle_job_request(e);
    } else if (e.msg_type == MsgType::job_abort) {
      handle_job_abort(e);
    }
    return;
  }
  if (e.msg_type == MsgType::model_reply &&
      (msg.topic == scheme_.model_replies() || msg.topic == scheme_.model_replies(config_.client_id))) {
    handle_model_reply(e);
    return;
  }
  spdlog::debug("cn {}: ignored {} on {}", config_.client_id, proto::msg_type_name(e.msg_type), msg.topic);
}

void ClientNode::handle_job_request(const Envelope& e) {
  if (config_.role != proto::Role::client_participant) return;
  {
    std::lock_guard lock(mu_);
    ++counters_.job_requests;
    if (active_) {
      ++counters_.busy_ignored;
      spdlog::info("cn {}: busy with {}/{}, not acknowledging {}/{}", config_.client_id, active_->first,
                   active_->second, e.experiment_id, e.round);
      return;
    }
  }
  Job job;
  job.experiment_id = e.experiment_id;
  job.round = e.round;
  job.received = Clock::now();
  try {
    job.request = proto::job_request_from_json(e.payload);
  } catch (const proto::ProtocolError& ex) {
    spdlog::warn("cn {}: undecodable job request: {}", config_.client_id, ex.what());
    return;
  }
  if (worker_.joinable()) worker_.join();  // previous job already left the active state
  {
    std::lock_guard lock(mu_);
    active_ = std::make_pair(job.experiment_id, job.round);
    ++counters_.acks;
  }
  const Envelope ack = proto::make_envelope(MsgType::job_acknowledge, job.experiment_id, job.round,
                                            config_.client_id, util::Json::object());
  session_->publish(scheme_.job_replies(config_.client_id), proto::serialize(ack), false);
  status_->update(NodeState::training, job.experiment_id, job.round);
  worker_ = std::jthread([this, job = std::move(job)](std::stop_token stop) mutable { run_job(stop, std::move(job)); });
}

void ClientNode::handle_job_abort(const Envelope& e) {
  std::lock_guard publish(publish_mu_);
  std::lock_guard lock(mu_);
  if (active_ && active_->first == e.experiment_id && active_->second == e.round) {
    spdlog::info("cn {}: abort for {}/{}", config_.client_id, e.experiment_id, e.round);
    worker_.request_stop();
  }
}

bool ClientNode::publish_unless_cancelled(const std::stop_token& stop, MsgType type, const Job& job,
                                          util::Json payload) {
  std::lock_guard publish(publish_mu_);
  if (stop.stop_requested()) return false;
  const Envelope e = proto::make_envelope(type, job.experiment_id, job.round, config_.client_id, std::move(payload));
  {
    // The job is over once its terminal message is out; the next request may
    // follow immediately.
    std::lock_guard lock(mu_);
    ++(type == MsgType::job_reply ? counters_.replies : counters_.failures);
    active_.reset();
  }
  session_->publish(scheme_.job_replies(config_.client_id), proto::serialize(e), false);
  return true;
}

std::optional<model::EvalMetrics> ClientNode::try_evaluate(const Job& job, const model::ModelWeights& weights,
                                                           const char* phase) {
  status_->update(NodeState::evaluating, job.experiment_id, job.round);
  const auto started = Clock::now();
  try {
    auto m = model::evaluate(job.request.model_config, weights, config_.data->eval_data(),
                             job.request.training.class_threshold);
    if (Clock::now() - started > util::seconds_to_ms(job.request.eval_timeout_s)) {
      spdlog::warn("cn {}: {} exceeded its timeout, metric omitted", config_.client_id, phase);
      return std::nullopt;
    }
    return m;
  } catch (const std::exception& ex) {
    spdlog::warn("cn {}: {} failed, metric omitted: {}", config_.client_id, phase, ex.what());
    return std::nullopt;
  }
}

void ClientNode::append_metrics(const std::string& experiment_id, const util::Json& line) {
  const fs::path dir = experiment_dir(experiment_id);
  fs::create_directories(dir);
  std::ofstream out(dir / "metrics.jsonl", std::ios::app);
  out << line.dump() << '\n';
}

void ClientNode::finish_job(NodeState state, const Job& job, const std::string& diagnostic) {
  status_->update(state, job.experiment_id, job.round, diagnostic);
  {
    std::lock_guard lock(mu_);
    active_.reset();
  }
  cv_.notify_all();
}

void ClientNode::run_job(std::stop_token stop, Job job) {
  const auto& req = job.request;
  auto aborted = [&] {
    {
      std::lock_guard lock(mu_);
      ++counters_.aborted;
    }
    spdlog::info("cn {}: job {}/{} cancelled, no reply", config_.client_id, job.experiment_id, job.round);
    finish_job(NodeState::idle, job, "");
  };
  try {
    model::require_compatible(req.model_config, req.global_weights);
    const model::Dataset& train = config_.data->train_data();
    if (train.n_features() != req.model_config.input_dim) {
      throw model::DataError("local data has " + std::to_string(train.n_features()) +
                             " features, model expects " + std::to_string(req.model_config.input_dim));
    }

    std::optional<model::EvalMetrics> pre, post;
    if (req.pre_eval) pre = try_evaluate(job, req.global_weights, "pre-evaluation");
    if (stop.stop_requested()) return aborted();

    algo::ClientAlgState state;
    {
      std::lock_guard lock(mu_);
      if (alg_experiment_ != job.experiment_id) {
        alg_experiment_ = job.experiment_id;
        alg_state_ = {};
      }
      state = alg_state_;
    }
    const model::ModelWeights* server_c = req.scaffold_c ? &*req.scaffold_c : nullptr;
    const auto modifier = algo::make_modifier(req.algorithm, req.global_weights, state, server_c);
    model::TrainingSettings settings = req.training;
    settings.rng_seed = job_seed(req.training.rng_seed, job.round, config_.client_id);
    status_->update(NodeState::training, job.experiment_id, job.round);
    model::TrainControl control{Clock::now() + util::seconds_to_ms(req.train_timeout_s), stop};
    auto result = model::train_local(req.model_config, req.global_weights, train, settings, &modifier, control);
    if (result.stop_reason == model::StopReason::cancelled) return aborted();

    if (req.post_eval) post = try_evaluate(job, result.weights, "post-evaluation");
    if (stop.stop_requested()) return aborted();
    auto fin = algo::finalize_client_update(req.algorithm, req.global_weights, result.weights, state, server_c,
                                            result.steps);

    proto::JobReply reply;
    reply.new_weights = std::move(result.weights);
    reply.n_train_samples = train.size();
    reply.completed_epochs = result.completed_epochs;
    reply.steps = result.steps;
    reply.truncated = result.stop_reason == model::StopReason::deadline;
    reply.delta_c = fin.delta_c;

    util::Json line{{"round", job.round},
                    {"completed_epochs", reply.completed_epochs},
                    {"steps", reply.steps},
                    {"truncated", reply.truncated},
                    {"n_train_samples", reply.n_train_samples}};
    if (!result.epoch_losses.empty()) line["train_loss"] = result.epoch_losses.back();
    if (pre) line["pre_eval"] = model::to_json(*pre);
    if (post) line["post_eval"] = model::to_json(*post);
    append_metrics(job.experiment_id, line);
    proto::write_weight_file(experiment_dir(job.experiment_id) / "local" / "latest.weights", reply.new_weights);

    if (config_.allow_metrics_upload) {
      reply.pre_eval = pre;
      reply.post_eval = post;
    } else {
      reply.metrics_withheld = true;
    }
    if (!publish_unless_cancelled(stop, MsgType::job_reply, job, to_json(reply))) return aborted();
    {
      std::lock_guard lock(mu_);
      alg_state_ = std::move(fin.state);
    }
    finish_job(NodeState::idle, job, "");
  } catch (const std::exception& ex) {
    if (stop.stop_requested()) return aborted();
    const std::string diag = ex.what();
    spdlog::warn("cn {}: job {}/{} failed: {}", config_.client_id, job.experiment_id, job.round, diag);
    try {
      publish_unless_cancelled(stop, MsgType::job_failed, job, to_json(proto::JobFailed{diag}));
    } catch (const std::exception& pub) {
      spdlog::error("cn {}: cannot report failure: {}", config_.client_id, pub.what());
    }
    finish_job(NodeState::idle, job, diag);
  }
}

void ClientNode::handle_model_reply(const Envelope& e) {
  proto::ModelReply reply;
  try {
    reply = proto::model_reply_from_json(e.payload);
  } catch (const std::exception& ex) {
    spdlog::warn("cn {}: unusable model reply for '{}': {}", config_.client_id, e.experiment_id, ex.what());
    return;
  }
  bool first = false;
  {
    std::lock_guard lock(mu_);
    ++counters_.model_replies;
    first = seen_models_.insert(proto::dedupe_key(e)).second;
  }
  if (reply.error) {
    spdlog::info("cn {}: model request for '{}' answered: {}", config_.client_id, e.experiment_id, *reply.error);
  } else {
    proto::write_weight_file(experiment_dir(e.experiment_id) / "final.weights", *reply.weights);
    if (first && config_.role == proto::Role::client_observer && reply.model_config) {
      try {
        const auto m = model::evaluate(*reply.model_config, *reply.weights, config_.data->eval_data());
        util::Json line{{"final_model", true}, {"final_round", reply.final_round}, {"eval", model::to_json(m)}};
        append_metrics(e.experiment_id, line);
      } catch (const std::exception& ex) {
        spdlog::warn("cn {}: evaluation of the final model failed: {}", config_.client_id, ex.what());
      }
    }
  }
  {
    std::lock_guard lock(mu_);
    auto it = models_.find(e.experiment_id);
    if (it == models_.end() || (reply.weights && !it->second.weights)) models_[e.experiment_id] = reply;
  }
  cv_.notify_all();
}

}  // namespace fedplat::cn
