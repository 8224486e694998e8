#include "fedplat/proto/embedded_broker.hpp"

#include <algorithm>
#include <map>
#include <mutex>

#include <spdlog/spdlog.h>

#include "fedplat/util/blocking_queue.hpp"
#include "fedplat/util/clock.hpp"

namespace fedplat::proto {

namespace {

struct SessionCore {
  SessionCore(std::string id, std::size_t capacity) : client_id(std::move(id)), queue(capacity) {}

  const std::string client_id;
  std::vector<std::string> filters;  // guarded by State::mu
  util::BlockingQueue<Message> queue;
  bool open = true;  // guarded by State::mu

  bool wants(const std::string& topic) const {
    return std::any_of(filters.begin(), filters.end(),
                       [&](const std::string& f) { return topic_matches(f, topic); });
  }
};

using Targets = std::vector<std::shared_ptr<SessionCore>>;

}  // namespace

struct EmbeddedBroker::State {
  std::mutex mu;
  std::vector<AclRule> rules;
  std::set<std::string> known;
  EmbeddedBrokerOptions options;
  std::vector<std::shared_ptr<SessionCore>> sessions;
  std::map<std::string, Message> retained;
  std::vector<AuditEntry> audit;
  std::vector<PublishRecord> log;

  void deny(const std::string& client, AclAction action, const std::string& topic) {
    audit.push_back({client, action, topic, util::now_utc()});
    spdlog::warn("broker: denied {} by '{}' on '{}'",
                 action == AclAction::publish ? "publish" : "subscribe", client, topic);
  }

  void publish(const std::string& client, const std::string& topic, const std::string& payload,
               bool retain) {
    if (payload.size() > options.max_payload_bytes) {
      throw BrokerError("payload of " + std::to_string(payload.size()) +
                        " bytes exceeds the broker limit");
    }
    if (!valid_topic_name(topic)) throw BrokerError("invalid topic name '" + topic + "'");
    Targets targets;
    {
      std::lock_guard lock(mu);
      if (!acl_check(rules, client, AclAction::publish, topic)) {
        deny(client, AclAction::publish, topic);
        return;
      }
      if (retain) {
        if (payload.empty()) {
          retained.erase(topic);
        } else {
          retained[topic] = Message{topic, payload, true};
        }
      }
      for (const auto& s : sessions) {
        if (s->open && s->wants(topic)) targets.push_back(s);
      }
      log.push_back({client, topic, payload.size(), retain, targets.size()});
    }
    for (const auto& s : targets) s->queue.push(Message{topic, payload, false});
  }

  bool subscribe(const std::shared_ptr<SessionCore>& core, const std::string& filter) {
    if (!valid_topic_filter(filter)) return false;
    std::vector<Message> replay;
    {
      std::lock_guard lock(mu);
      if (!core->open) return false;
      if (!acl_check(rules, core->client_id, AclAction::subscribe, filter)) {
        deny(core->client_id, AclAction::subscribe, filter);
        return false;
      }
      if (std::find(core->filters.begin(), core->filters.end(), filter) == core->filters.end()) {
        core->filters.push_back(filter);
      }
      for (const auto& [topic, msg] : retained) {
        if (topic_matches(filter, topic)) replay.push_back(msg);
      }
    }
    for (auto& m : replay) core->queue.push(std::move(m));
    return true;
  }

  void detach(const std::shared_ptr<SessionCore>& core) {
    {
      std::lock_guard lock(mu);
      core->open = false;
      std::erase(sessions, core);
    }
    core->queue.close();
  }
};

namespace {

class EmbeddedSession : public Session {
 public:
  EmbeddedSession(std::shared_ptr<EmbeddedBroker::State> state, std::shared_ptr<SessionCore> core)
      : state_(std::move(state)), core_(std::move(core)) {}
  ~EmbeddedSession() override { close(); }

  const std::string& client_id() const override { return core_->client_id; }

  void publish(const std::string& topic, const std::string& payload, bool retain) override {
    state_->publish(core_->client_id, topic, payload, retain);
  }

  bool subscribe(const std::string& filter) override { return state_->subscribe(core_, filter); }

  std::optional<Message> receive(std::chrono::steady_clock::time_point deadline) override {
    return core_->queue.pop_until(deadline);
  }

  void close() override { state_->detach(core_); }

 private:
  std::shared_ptr<EmbeddedBroker::State> state_;
  std::shared_ptr<SessionCore> core_;
};

}  // namespace

EmbeddedBroker::EmbeddedBroker(std::vector<AclRule> rules, std::set<std::string> known_clients,
                               EmbeddedBrokerOptions options)
    : state_(std::make_shared<State>()) {
  state_->rules = std::move(rules);
  state_->known = std::move(known_clients);
  state_->options = options;
}

EmbeddedBroker::~EmbeddedBroker() = default;

std::unique_ptr<Session> EmbeddedBroker::connect(const std::string& client_id) {
  std::lock_guard lock(state_->mu);
  if (!state_->known.contains(client_id)) {
    state_->audit.push_back({client_id, AclAction::subscribe, "<connect>", util::now_utc()});
    throw ConnectionRefused("unknown client id '" + client_id + "'");
  }
  auto core = std::make_shared<SessionCore>(client_id, state_->options.queue_capacity);
  state_->sessions.push_back(core);
  return std::make_unique<EmbeddedSession>(state_, std::move(core));
}

std::vector<AuditEntry> EmbeddedBroker::audit_log() const {
  std::lock_guard lock(state_->mu);
  return state_->audit;
}

std::vector<PublishRecord> EmbeddedBroker::publish_log() const {
  std::lock_guard lock(state_->mu);
  return state_->log;
}

std::size_t EmbeddedBroker::retained_count() const {
  std::lock_guard lock(state_->mu);
  return state_->retained.size();
}

}  // namespace fedplat::proto
