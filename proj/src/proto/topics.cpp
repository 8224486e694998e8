#include "fedplat/proto/topics.hpp"

#include <array>
#include <utility>
#include <vector>

namespace fedplat::proto {

namespace {

constexpr std::array<std::pair<MsgType, std::string_view>, 11> kNames{{
    {MsgType::experiment_request, "ExperimentRequest"},
    {MsgType::experiment_accepted, "ExperimentAccepted"},
    {MsgType::experiment_rejected, "ExperimentRejected"},
    {MsgType::job_request, "JobRequest"},
    {MsgType::job_acknowledge, "JobAcknowledge"},
    {MsgType::job_reply, "JobReply"},
    {MsgType::job_failed, "JobFailed"},
    {MsgType::job_abort, "JobAbort"},
    {MsgType::model_request, "ModelRequest"},
    {MsgType::model_reply, "ModelReply"},
    {MsgType::status_report, "StatusReport"},
}};

std::vector<std::string_view> split_levels(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t slash = s.find('/', start);
    if (slash == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, slash - start));
    start = slash + 1;
  }
}

void check_client_id(std::string_view id) {
  if (id.empty() || !valid_topic_name(id) || id.find('/') != std::string_view::npos) {
    throw TopicError("invalid client id '" + std::string(id) + "'");
  }
}

}  // namespace

std::string_view msg_type_name(MsgType type) {
  for (const auto& [t, name] : kNames) {
    if (t == type) return name;
  }
  return "?";
}

std::optional<MsgType> msg_type_from_name(std::string_view name) {
  for (const auto& [t, n] : kNames) {
    if (n == name) return t;
  }
  return std::nullopt;
}

TopicScheme::TopicScheme(std::string prefix) : prefix_(std::move(prefix)) {
  if (prefix_.empty() || !valid_topic_name(prefix_)) {
    throw TopicError("invalid topic prefix '" + prefix_ + "'");
  }
}

std::string TopicScheme::job_replies(std::string_view client) const {
  check_client_id(client);
  return prefix_ + "/job-replies/" + std::string(client);
}

std::string TopicScheme::model_requests(std::string_view client) const {
  check_client_id(client);
  return prefix_ + "/model-requests/" + std::string(client);
}

std::string TopicScheme::model_replies(std::string_view client) const {
  check_client_id(client);
  return prefix_ + "/model-replies/" + std::string(client);
}

std::string TopicScheme::status_reports(std::string_view client) const {
  check_client_id(client);
  return prefix_ + "/status-reports/" + std::string(client);
}

std::string TopicScheme::topic_for(MsgType type, std::optional<std::string_view> client_id) const {
  auto shared = [&](std::string topic) {
    if (client_id) {
      throw TopicError(std::string(msg_type_name(type)) + " has no per-client topic");
    }
    return topic;
  };
  auto individual = [&]() -> std::string_view {
    if (!client_id) {
      throw TopicError(std::string(msg_type_name(type)) + " requires a client id");
    }
    return *client_id;
  };
  switch (type) {
    case MsgType::experiment_request:
      return shared(control_center());
    case MsgType::experiment_accepted:
    case MsgType::experiment_rejected:
      return shared(ps_replies());
    case MsgType::job_request:
    case MsgType::job_abort:
      return shared(job_requests());
    case MsgType::job_acknowledge:
    case MsgType::job_reply:
    case MsgType::job_failed:
      return job_replies(individual());
    case MsgType::model_request:
      return model_requests(individual());
    case MsgType::model_reply:
      return client_id ? model_replies(*client_id) : model_replies();
    case MsgType::status_report:
      return status_reports(individual());
  }
  throw TopicError("unknown message type");
}

bool topic_matches(std::string_view filter, std::string_view topic) {
  const auto f = split_levels(filter);
  const auto t = split_levels(topic);
  std::size_t i = 0;
  for (; i < f.size(); ++i) {
    if (f[i] == "#") return true;  // also matches the parent level itself
    if (i >= t.size()) return false;
    if (f[i] != "+" && f[i] != t[i]) return false;
  }
  return i == t.size();
}

bool filter_covers(std::string_view granted, std::string_view requested) {
  const auto g = split_levels(granted);
  const auto r = split_levels(requested);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] == "#") return true;
    if (i >= r.size()) return false;
    if (r[i] == "#") return false;
    if (g[i] == "+") continue;
    if (r[i] == "+" || g[i] != r[i]) return false;
  }
  return g.size() == r.size();
}

bool valid_topic_name(std::string_view topic) {
  return !topic.empty() && topic.find_first_of("+#") == std::string_view::npos &&
         topic.find('\0') == std::string_view::npos;
}

bool valid_topic_filter(std::string_view filter) {
  if (filter.empty()) return false;
  const auto levels = split_levels(filter);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto l = levels[i];
    if (l == "#") {
      if (i + 1 != levels.size()) return false;
    } else if (l != "+" && l.find_first_of("+#") != std::string_view::npos) {
      return false;
    }
  }
  return true;
}

}  // namespace fedplat::proto
