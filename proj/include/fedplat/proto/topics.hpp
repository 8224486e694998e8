#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fedplat::proto {

enum class MsgType {
  experiment_request,
  experiment_accepted,
  experiment_rejected,
  job_request,
  job_acknowledge,
  job_reply,
  job_failed,
  job_abort,
  model_request,
  model_reply,
  status_report,
};

inline constexpr MsgType kAllMsgTypes[] = {
    MsgType::experiment_request, MsgType::experiment_accepted, MsgType::experiment_rejected,
    MsgType::job_request,        MsgType::job_acknowledge,     MsgType::job_reply,
    MsgType::job_failed,         MsgType::job_abort,           MsgType::model_request,
    MsgType::model_reply,        MsgType::status_report,
};

// Wire names: "ExperimentRequest", "JobReply", ...
std::string_view msg_type_name(MsgType type);
std::optional<MsgType> msg_type_from_name(std::string_view name);

class TopicError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Federation namespace, e.g. "CAFEIN/TRUSTroke/CEP-1". Every topic lives
// below the prefix:
//   control-center                ExperimentRequest
//   parameter-server-replies      ExperimentAccepted, ExperimentRejected
//   job-requests                  JobRequest, JobAbort
//   job-replies/<client>          JobAcknowledge, JobReply, JobFailed
//   model-requests/<client>       ModelRequest
//   model-replies[/<client>]      ModelReply (broadcast or individual)
//   status-reports/<client>       StatusReport (retained)
class TopicScheme {
 public:
  explicit TopicScheme(std::string prefix);

  const std::string& prefix() const { return prefix_; }

  // Throws TopicError when a per-client type is missing its client_id, or
  // when a client_id is given to a type that has no per-client topic.
  std::string topic_for(MsgType type, std::optional<std::string_view> client_id = {}) const;

  std::string control_center() const { return prefix_ + "/control-center"; }
  std::string ps_replies() const { return prefix_ + "/parameter-server-replies"; }
  std::string job_requests() const { return prefix_ + "/job-requests"; }
  std::string job_replies(std::string_view client) const;
  std::string model_requests(std::string_view client) const;
  std::string model_replies() const { return prefix_ + "/model-replies"; }
  std::string model_replies(std::string_view client) const;
  std::string status_reports(std::string_view client) const;

 private:
  std::string prefix_;
};

// MQTT filter matching: '+' matches exactly one level, a trailing '#' matches
// the parent level and everything below it.
bool topic_matches(std::string_view filter, std::string_view topic);

// True when every topic matched by `requested` is also matched by `granted`.
bool filter_covers(std::string_view granted, std::string_view requested);

bool valid_topic_name(std::string_view topic);    // no wildcards, non-empty levels allowed
bool valid_topic_filter(std::string_view filter);  // wildcards in whole levels only

}  // namespace fedplat::proto
