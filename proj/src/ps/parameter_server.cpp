#include "fedplat/ps/parameter_server.hpp"

#include <deque>
#include <fstream>

#include <spdlog/spdlog.h>

#include "fedplat/model/mlp.hpp"
#include "fedplat/proto/codec.hpp"
#include "fedplat/proto/messages.hpp"
#include "fedplat/util/clock.hpp"

namespace fedplat::ps {

namespace fs = std::filesystem;
using proto::Envelope;
using proto::MsgType;
using proto::NodeState;
using Clock = std::chrono::steady_clock;

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::optional<model::EvalMetrics> weighted(const std::vector<model::EvalMetrics>& items) {
  if (items.empty()) return std::nullopt;
  std::vector<std::size_t> n;
  std::vector<double> loss, precision, recall, f1, auprc;
  for (const auto& m : items) {
    n.push_back(m.n_samples);
    loss.push_back(m.loss);
    precision.push_back(m.precision);
    recall.push_back(m.recall);
    f1.push_back(m.f1);
    auprc.push_back(m.auprc);
  }
  std::size_t total = 0;
  for (std::size_t k : n) total += k;
  if (total == 0) return std::nullopt;
  model::EvalMetrics out;
  out.loss = algo::weighted_metric_mean(loss, n);
  out.precision = algo::weighted_metric_mean(precision, n);
  out.recall = algo::weighted_metric_mean(recall, n);
  out.f1 = algo::weighted_metric_mean(f1, n);
  out.auprc = algo::weighted_metric_mean(auprc, n);
  out.n_samples = total;
  out.threshold_used = items.front().threshold_used;
  return out;
}

// "<prefix>/<segment>/<client>" -> client, or empty when the topic is not of
// that form.
std::string suffix_after(const std::string& topic, const std::string& base) {
  if (topic.size() <= base.size() + 1 || topic.compare(0, base.size(), base) != 0 || topic[base.size()] != '/') {
    return {};
  }
  return topic.substr(base.size() + 1);
}

}  // namespace

std::string_view experiment_status_name(ExperimentStatus s) {
  switch (s) {
    case ExperimentStatus::running: return "running";
    case ExperimentStatus::completed: return "completed";
    case ExperimentStatus::stopped_early: return "stopped_early";
    case ExperimentStatus::failed: return "failed";
  }
  return "?";
}

std::string_view round_outcome_name(RoundOutcome o) {
  switch (o) {
    case RoundOutcome::aggregated: return "aggregated";
    case RoundOutcome::skipped_acks: return "skipped_acks";
    case RoundOutcome::skipped_replies: return "skipped_replies";
  }
  return "?";
}

struct ParameterServer::Round {
  std::size_t number = 0;
  bool ack_phase = true;
  std::set<std::string> acks;
  std::set<std::string> failures;
  std::map<std::string, proto::JobReply> replies;
};

struct ParameterServer::Running {
  schema::ExperimentSpec spec;
  fs::path dir;
  std::ofstream events;
  std::ofstream metrics;
  ModelWeights global;
  algo::ServerAggState agg;
  algo::SchedulerState sched;
  std::optional<ModelWeights> best_global;
  std::optional<std::size_t> best_round;
  std::optional<std::size_t> last_aggregated;
  std::deque<std::size_t> history;
  util::Json last_round = nullptr;
  std::size_t aggregated = 0;
};

ParameterServer::ParameterServer(PsConfig config, std::unique_ptr<proto::Session> session)
    : config_(std::move(config)), scheme_(config_.prefix), session_(std::move(session)) {
  status_ = std::make_unique<proto::StatusPublisher>(*session_, scheme_, proto::Role::parameter_server,
                                                     config_.heartbeat);
}

ParameterServer::~ParameterServer() { stop(); }

void ParameterServer::start() {
  for (const std::string& filter : {scheme_.control_center(), scheme_.prefix() + "/job-replies/+",
                                    scheme_.prefix() + "/model-requests/+"}) {
    if (!session_->subscribe(filter)) throw proto::BrokerError("subscription refused: " + filter);
  }
  status_->start();
  status_->update(NodeState::idle, "", 0);
  thread_ = std::thread([this] { loop(); });
}

void ParameterServer::stop() {
  if (stopping_.exchange(true)) return;
  if (thread_.joinable()) thread_.join();
  status_->stop();
  session_->close();
}

void ParameterServer::on_round(std::function<void(const RoundReport&)> callback) {
  std::lock_guard lock(mu_);
  on_round_ = std::move(callback);
}

bool ParameterServer::busy() const {
  std::lock_guard lock(mu_);
  return running_id_.has_value();
}

std::optional<ExperimentRecord> ParameterServer::experiment(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = records_.find(id);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

std::optional<ModelWeights> ParameterServer::final_model(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = finals_.find(id);
  if (it == finals_.end()) return std::nullopt;
  return it->second;
}

std::optional<ExperimentRecord> ParameterServer::wait_for_completion(const std::string& id,
                                                                     std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] {
    auto it = records_.find(id);
    return it != records_.end() && it->second.status != ExperimentStatus::running;
  });
  auto it = records_.find(id);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

fs::path ParameterServer::experiment_dir(const std::string& id) const {
  return config_.artifact_root / "experiments" / id;
}

void ParameterServer::loop() {
  while (!stopping_) {
    const auto deadline = Clock::now() + std::chrono::milliseconds(100);
    auto msg = session_->receive(deadline);
    if (!msg) {
      std::this_thread::sleep_until(deadline);  // closed sessions return at once
      continue;
    }
    try {
      handle_idle(*msg);
    } catch (const std::exception& e) {
      spdlog::error("ps: {}", e.what());
    }
  }
}

bool ParameterServer::receive_until(Clock::time_point deadline,
                                    const std::function<void(const proto::Message&)>& handler,
                                    const std::function<bool()>& done) {
  while (!done()) {
    if (stopping_) return false;
    const auto now = Clock::now();
    if (now >= deadline) return false;
    const auto slice = std::min(deadline, now + std::chrono::milliseconds(100));
    if (auto msg = session_->receive(slice)) {
      handler(*msg);
    } else if (Clock::now() < slice) {
      std::this_thread::sleep_until(slice);
    }
  }
  return true;
}

void ParameterServer::send(MsgType type, const std::string& topic, const std::string& experiment_id,
                           std::size_t round, util::Json payload) {
  const Envelope e = proto::make_envelope(type, experiment_id, round, session_->client_id(), std::move(payload));
  session_->publish(topic, proto::serialize(e), false);
}

void ParameterServer::event(Running& run, const std::string& line) {
  run.events << util::now_utc() << ' ' << line << '\n';
  run.events.flush();
  spdlog::info("ps [{}]: {}", run.spec.experiment_id, line);
}

void ParameterServer::log_stale(Running* run, const std::string& what) {
  if (run) {
    event(*run, "ignored " + what);
  } else {
    spdlog::info("ps: ignored {}", what);
  }
}

void ParameterServer::handle_idle(const proto::Message& msg) {
  Envelope e;
  try {
    e = proto::parse_envelope(msg.payload);
  } catch (const proto::ProtocolError& ex) {
    spdlog::warn("ps: undecodable message on {}: {}", msg.topic, ex.what());
    return;
  }
  if (msg.topic == scheme_.control_center() && e.msg_type == MsgType::experiment_request) {
    handle_experiment_request(e);
    return;
  }
  const std::string requester = suffix_after(msg.topic, scheme_.prefix() + "/model-requests");
  if (!requester.empty() && e.msg_type == MsgType::model_request) {
    handle_model_request(requester, e);
    return;
  }
  spdlog::info("ps: ignored stale {} from {} (experiment '{}', round {})", proto::msg_type_name(e.msg_type),
               e.sender_id, e.experiment_id, e.round);
}

void ParameterServer::handle_experiment_request(const Envelope& e) {
  const std::string& id = e.experiment_id;
  const std::string reply_topic = scheme_.ps_replies();
  {
    std::lock_guard lock(mu_);
    if (running_id_) {
      send(MsgType::experiment_rejected, reply_topic, id, 0, to_json(proto::ExperimentRejected{"busy", {}}));
      spdlog::info("ps: rejected '{}': busy with '{}'", id, *running_id_);
      return;
    }
  }
  schema::ValidationContext ctx{true, config_.participants.size()};
  auto report = schema::validate_experiment(e.payload, ctx);
  if (report.valid && e.payload.at("experiment_id").get<std::string>() != id) {
    report.errors.push_back({"experiment_id", "does not match the envelope"});
    report.valid = false;
  }
  if (report.valid) {
    std::lock_guard lock(mu_);
    if (records_.contains(id) || fs::exists(experiment_dir(id))) {
      report.errors.push_back({"experiment_id", "already used"});
      report.valid = false;
    }
  }
  if (!report.valid) {
    send(MsgType::experiment_rejected, reply_topic, id, 0,
         to_json(proto::ExperimentRejected{"invalid", report.errors}));
    spdlog::info("ps: rejected '{}': {} validation error(s)", id, report.errors.size());
    return;
  }
  schema::ExperimentSpec spec = schema::parse_experiment(e.payload, ctx);
  send(MsgType::experiment_accepted, reply_topic, id, 0, util::Json::object());
  run_experiment(std::move(spec));
}

void ParameterServer::handle_model_request(const std::string& client, const Envelope& e) {
  if (e.sender_id != client) {
    spdlog::warn("ps: model request on {}'s topic claims sender {}", client, e.sender_id);
    return;
  }
  proto::ModelReply reply;
  {
    std::lock_guard lock(mu_);
    if (auto it = finals_.find(e.experiment_id); it != finals_.end()) {
      reply.weights = it->second;
      const auto& rec = records_.at(e.experiment_id);
      reply.final_round = rec.final_round.value_or(0);
      reply.model_config = rec.spec.model_config;
    } else if (records_.contains(e.experiment_id)) {
      reply.error = "not finalized";
    }
  }
  if (!reply.weights && !reply.error) {
    const fs::path stored = experiment_dir(e.experiment_id) / "global" / "final.weights";
    std::error_code ec;
    if (!e.experiment_id.empty() && fs::exists(stored, ec)) {
      reply.weights = proto::read_weight_file(stored);
      std::ifstream spec_file(experiment_dir(e.experiment_id) / "spec.json");
      const auto spec = util::Json::parse(spec_file, nullptr, false);
      if (spec.is_object() && spec.contains("model_config")) {
        reply.model_config = model::model_config_from_json(spec.at("model_config"));
      }
    } else {
      reply.error = "unknown experiment";
    }
  }
  send(MsgType::model_reply, scheme_.model_replies(client), e.experiment_id, 0, to_json(reply));
}

void ParameterServer::run_experiment(schema::ExperimentSpec spec) {
  Running run;
  run.spec = std::move(spec);
  const std::string id = run.spec.experiment_id;
  {
    std::lock_guard lock(mu_);
    ExperimentRecord rec;
    rec.spec = run.spec;
    records_[id] = rec;
    running_id_ = id;
  }
  try {
    run.dir = experiment_dir(id);
    fs::create_directories(run.dir / "global");
    fs::create_directories(run.dir / "clients");
    proto::write_file_atomic(run.dir / "spec.json", schema::to_json(run.spec).dump(2) + "\n");
    run.events.open(run.dir / "events.log", std::ios::app);
    run.metrics.open(run.dir / "metrics.jsonl", std::ios::app);
    if (!run.events || !run.metrics) throw std::runtime_error("cannot open experiment logs in " + run.dir.string());

    const auto& cfg = run.spec.model_config;
    const std::uint64_t seed = cfg.seed_policy == model::SeedPolicy::explicit_seed ? cfg.seed : fnv1a(id);
    run.global = model::build_model(cfg, seed);
    run.agg = algo::ServerAggState::initial(run.global, config_.participants.size());
    run.sched = algo::SchedulerState::initial(run.spec.process.scheduler, run.spec.training.learning_rate);
    event(run, "experiment accepted: " + std::string(algo::algorithm_name(run.spec.algorithm.kind)) + ", " +
                   std::to_string(run.spec.process.rounds) + " rounds, seed " + std::to_string(seed));
  } catch (const std::exception& ex) {
    spdlog::error("ps: cannot start '{}': {}", id, ex.what());
    if (run.events) event(run, std::string("experiment failed: ") + ex.what());
    finish(run, ExperimentStatus::failed, ex.what());
    return;
  }

  for (std::size_t r = 1; r <= run.spec.process.rounds; ++r) {
    if (stopping_) {
      finish(run, ExperimentStatus::failed, "parameter server stopped");
      return;
    }
    RoundReport report;
    try {
      report = run_round(run, r);
    } catch (const std::exception& ex) {
      event(run, "round " + std::to_string(r) + " failed: " + ex.what());
      finish(run, ExperimentStatus::failed, ex.what());
      return;
    }
    std::function<void(const RoundReport&)> callback;
    {
      std::lock_guard lock(mu_);
      RoundReport slim = report;
      slim.global = ModelWeights{};
      auto& rec = records_.at(id);
      rec.rounds.push_back(std::move(slim));
      rec.aggregated_rounds = run.aggregated;
      rec.best_round = run.best_round;
      callback = on_round_;
    }
    if (callback) callback(report);
    if (report.early_stop) {
      event(run, "early stop after round " + std::to_string(r) + ", best round " +
                     std::to_string(run.best_round.value_or(0)));
      finish(run, ExperimentStatus::stopped_early, "");
      return;
    }
  }
  finish(run, ExperimentStatus::completed, "");
}

void ParameterServer::handle_during_round(Running& run, Round& round, const proto::Message& msg) {
  const std::string client = suffix_after(msg.topic, scheme_.prefix() + "/job-replies");
  if (client.empty()) {
    handle_idle(msg);
    return;
  }
  Envelope e;
  try {
    e = proto::parse_envelope(msg.payload);
  } catch (const proto::ProtocolError& ex) {
    log_stale(&run, "undecodable message from " + client + ": " + ex.what());
    return;
  }
  const std::string what = std::string(proto::msg_type_name(e.msg_type)) + " from " + client + " (experiment '" +
                           e.experiment_id + "', round " + std::to_string(e.round) + ")";
  if (e.sender_id != client) {
    log_stale(&run, what + ": sender field says " + e.sender_id);
    return;
  }
  if (e.experiment_id != run.spec.experiment_id || e.round != round.number) {
    log_stale(&run, "stale " + what);
    return;
  }
  switch (e.msg_type) {
    case MsgType::job_acknowledge:
      if (!round.ack_phase) {
        if (!round.acks.contains(client)) log_stale(&run, "late " + what);
        return;
      }
      round.acks.insert(client);
      return;
    case MsgType::job_reply:
    case MsgType::job_failed:
      break;
    default:
      log_stale(&run, "unexpected " + what);
      return;
  }
  if (!round.acks.contains(client)) {
    log_stale(&run, what + " without an acknowledgement");
    return;
  }
  if (round.replies.contains(client) || round.failures.contains(client)) return;  // redelivery
  if (e.msg_type == MsgType::job_failed) {
    const auto failed = proto::job_failed_from_json(e.payload);
    round.failures.insert(client);
    event(run, "round " + std::to_string(round.number) + ": " + client + " failed: " + failed.diagnostic);
    return;
  }
  try {
    round.replies.emplace(client, proto::job_reply_from_json(e.payload));
  } catch (const proto::ProtocolError& ex) {
    round.failures.insert(client);
    event(run, "round " + std::to_string(round.number) + ": unusable reply from " + client + ": " + ex.what());
  }
}

RoundReport ParameterServer::run_round(Running& run, std::size_t r) {
  const auto& process = run.spec.process;
  const std::string& id = run.spec.experiment_id;
  const std::size_t n_participants = config_.participants.size();
  util::Json detail{{"experiment_status", "running"}, {"rounds_total", process.rounds}, {"last_round", run.last_round}};
  status_->update(NodeState::waiting, id, r, "", detail);

  Round round;
  round.number = r;
  RoundReport report;
  report.experiment_id = id;
  report.round = r;
  report.learning_rate = run.sched.current_lr;

  proto::JobRequest job;
  job.model_config = run.spec.model_config;
  job.training = run.spec.training;
  job.training.learning_rate = run.sched.current_lr;
  job.algorithm = run.spec.algorithm;
  job.global_weights = run.global;
  if (run.spec.algorithm.kind == algo::AlgorithmKind::scaffold) job.scaffold_c = run.agg.scaffold_c;
  job.train_timeout_s = process.train_timeout_s;
  job.eval_timeout_s = process.eval_timeout_s;
  job.pre_eval = process.pre_eval;
  job.post_eval = process.post_eval;
  const auto broadcast_at = Clock::now();
  send(MsgType::job_request, scheme_.job_requests(), id, r, to_json(job));

  auto handler = [&](const proto::Message& m) { handle_during_round(run, round, m); };
  receive_until(broadcast_at + util::seconds_to_ms(process.ack_timeout_s), handler,
                [&] { return round.acks.size() == n_participants; });
  round.ack_phase = false;
  report.acks = round.acks;

  auto record_skip = [&](RoundOutcome outcome, const std::string& why) {
    report.outcome = outcome;
    report.failures = round.failures;
    for (const auto& [c, _] : round.replies) report.replies.insert(c);
    report.global = run.global;
    event(run, "round " + std::to_string(r) + " skipped: " + why);
    run.last_round = {{"round", r}, {"outcome", round_outcome_name(outcome)}, {"learning_rate", report.learning_rate}};
    run.metrics << util::Json{{"round", r},
                              {"outcome", round_outcome_name(outcome)},
                              {"learning_rate", report.learning_rate},
                              {"acks", round.acks},
                              {"failures", round.failures}}
                       .dump()
                << '\n';
    run.metrics.flush();
    return report;
  };

  if (round.acks.size() < process.min_replies) {
    send(MsgType::job_abort, scheme_.job_requests(), id, r,
         to_json(proto::JobAbort{"insufficient acknowledgements"}));
    return record_skip(RoundOutcome::skipped_acks, "insufficient acks (" + std::to_string(round.acks.size()) + "/" +
                                                       std::to_string(process.min_replies) + ")");
  }

  const double budget_s = process.train_timeout_s + (process.pre_eval ? process.eval_timeout_s : 0.0) +
                          (process.post_eval ? process.eval_timeout_s : 0.0) + config_.grace_s;
  auto possible = [&] { return round.acks.size() - round.failures.size(); };
  receive_until(broadcast_at + util::seconds_to_ms(budget_s), handler, [&] {
    return round.replies.size() + round.failures.size() == round.acks.size() ||
           possible() < process.min_replies;
  });
  if (round.replies.size() < process.min_replies) {
    return record_skip(RoundOutcome::skipped_replies,
                       "insufficient replies (" + std::to_string(round.replies.size()) + " of " +
                           std::to_string(round.acks.size()) + " acks, " + std::to_string(round.failures.size()) +
                           " failed, need " + std::to_string(process.min_replies) + ")");
  }

  status_->update(NodeState::aggregating, id, r, "", detail);
  std::vector<algo::ClientUpdate> updates;
  std::vector<model::EvalMetrics> post, pre;
  util::Json clients = util::Json::object();
  for (auto& [client, reply] : round.replies) {
    algo::ClientUpdate u;
    u.client_id = client;
    u.new_weights = reply.new_weights;
    u.n_train_samples = reply.n_train_samples;
    u.delta_c = reply.delta_c;
    u.post_eval = reply.post_eval;
    u.pre_eval = reply.pre_eval;
    if (reply.post_eval) post.push_back(*reply.post_eval);
    if (reply.pre_eval) pre.push_back(*reply.pre_eval);
    util::Json c{{"n_train_samples", reply.n_train_samples},
                 {"completed_epochs", reply.completed_epochs},
                 {"truncated", reply.truncated}};
    if (reply.post_eval) c["post_eval"] = model::to_json(*reply.post_eval);
    if (reply.pre_eval) c["pre_eval"] = model::to_json(*reply.pre_eval);
    clients[client] = c;
    updates.push_back(std::move(u));
  }
  auto result = algo::aggregate(run.spec.algorithm, run.global, updates, run.agg);
  run.global = std::move(result.global);
  run.agg = std::move(result.state);
  ++run.aggregated;
  run.last_aggregated = r;

  report.outcome = RoundOutcome::aggregated;
  report.replies.clear();
  for (const auto& [c, _] : round.replies) report.replies.insert(c);
  report.failures = round.failures;
  report.weighted_post_eval = weighted(post);
  report.weighted_pre_eval = weighted(pre);

  // Scheduler on the weighted post-evaluation loss.
  const auto& sc = process.scheduler;
  if (sc.enabled && report.weighted_post_eval) {
    const double monitored = report.weighted_post_eval->loss;
    auto plateau = algo::plateau_step(run.sched, monitored, sc.direction);
    run.sched = plateau.state;
    if (plateau.lr_changed) event(run, "learning rate reduced to " + util::Json(run.sched.current_lr).dump());
    auto stop = algo::early_stop_step(run.sched, monitored, sc.direction, r);
    run.sched = stop.state;
    if (stop.improved) {
      const auto old_best = run.best_round;
      run.best_round = r;
      run.best_global = run.global;
      if (old_best && std::find(run.history.begin(), run.history.end(), *old_best) == run.history.end()) {
        fs::remove(run.dir / "global" / ("round_" + std::to_string(*old_best) + ".weights"));
      }
    }
    report.early_stop = stop.stop;
  }

  // Artifacts.
  for (const auto& u : updates) {
    proto::write_weight_file(run.dir / "clients" / u.client_id / "latest.weights", u.new_weights);
  }
  proto::write_weight_file(run.dir / "global" / ("round_" + std::to_string(r) + ".weights"), run.global);
  proto::write_weight_file(run.dir / "global" / "latest.weights", run.global);
  run.history.push_back(r);
  while (run.history.size() > process.history_rounds) {
    const std::size_t old = run.history.front();
    run.history.pop_front();
    if (old != r && run.best_round != old) {
      fs::remove(run.dir / "global" / ("round_" + std::to_string(old) + ".weights"));
    }
  }

  util::Json line{{"round", r},
                  {"outcome", "aggregated"},
                  {"learning_rate", report.learning_rate},
                  {"acks", round.acks},
                  {"failures", round.failures},
                  {"participants", report.replies},
                  {"clients", clients}};
  if (report.weighted_post_eval) line["weighted_post_eval"] = model::to_json(*report.weighted_post_eval);
  if (report.weighted_pre_eval) line["weighted_pre_eval"] = model::to_json(*report.weighted_pre_eval);
  run.metrics << line.dump() << '\n';
  run.metrics.flush();
  event(run, "round " + std::to_string(r) + " aggregated from " + std::to_string(updates.size()) + " client(s)");

  run.last_round = {{"round", r}, {"outcome", "aggregated"}, {"learning_rate", report.learning_rate}};
  if (report.weighted_post_eval) run.last_round["weighted_post_eval"] = model::to_json(*report.weighted_post_eval);
  report.global = run.global;
  return report;
}

void ParameterServer::finish(Running& run, ExperimentStatus status, const std::string& diagnostic) {
  const std::string id = run.spec.experiment_id;
  std::string diag = diagnostic;
  std::optional<ModelWeights> final_model;
  std::optional<std::size_t> final_round;
  if (status != ExperimentStatus::failed && run.aggregated == 0) {
    status = ExperimentStatus::failed;
    diag = "no round was aggregated";
  }
  if (status != ExperimentStatus::failed) {
    if (status == ExperimentStatus::stopped_early && run.best_global) {
      final_model = run.best_global;
      final_round = run.best_round;
    } else {
      final_model = run.global;
      final_round = run.last_aggregated;
    }
    try {
      proto::write_weight_file(run.dir / "global" / "final.weights", *final_model);
      proto::ModelReply reply{final_model, std::nullopt, *final_round, run.spec.model_config};
      send(MsgType::model_reply, scheme_.model_replies(), id, 0, to_json(reply));
    } catch (const std::exception& ex) {
      status = ExperimentStatus::failed;
      diag = std::string("cannot publish the final model: ") + ex.what();
      final_model.reset();
      final_round.reset();
    }
  }
  if (run.events.is_open()) {
    event(run, "experiment " + std::string(experiment_status_name(status)) + (diag.empty() ? "" : ": " + diag) +
                   (final_round ? ", final model from round " + std::to_string(*final_round) : ""));
  }
  util::Json detail{{"experiment_status", experiment_status_name(status)},
                    {"rounds_total", run.spec.process.rounds},
                    {"last_round", run.last_round}};
  if (final_round) detail["final_round"] = *final_round;
  status_->update(NodeState::idle, id, 0, diag, detail);
  {
    std::lock_guard lock(mu_);
    auto& rec = records_.at(id);
    rec.status = status;
    rec.diagnostic = diag;
    rec.final_round = final_round;
    rec.best_round = run.best_round;
    rec.aggregated_rounds = run.aggregated;
    if (final_model) finals_[id] = *final_model;
    running_id_.reset();
  }
  cv_.notify_all();
}

}  // namespace fedplat::ps
