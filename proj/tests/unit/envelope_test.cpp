#include <doctest.h>

#include <random>

#include "fedplat/model/mlp.hpp"
#include "fedplat/proto/codec.hpp"
#include "fedplat/proto/envelope.hpp"
#include "fedplat/proto/messages.hpp"

using namespace fedplat;
using namespace fedplat::proto;

TEST_CASE("envelope round trip") {
  const Envelope e = make_envelope(MsgType::job_reply, "exp-1", 4, "hospital-a", {{"k", 1}});
  const Envelope back = parse_envelope(serialize(e));
  CHECK(back.msg_type == MsgType::job_reply);
  CHECK(back.experiment_id == "exp-1");
  CHECK(back.round == 4);
  CHECK(back.sender_id == "hospital-a");
  CHECK(back.sent_at == e.sent_at);
  CHECK(back.payload == e.payload);
  CHECK(dedupe_key(back) == dedupe_key(e));
}

TEST_CASE("malformed envelopes are rejected") {
  CHECK_THROWS_AS(parse_envelope("not json"), ProtocolError);
  CHECK_THROWS_AS(parse_envelope("[]"), ProtocolError);
  auto doc = util::Json::parse(serialize(make_envelope(MsgType::job_abort, "e", 1, "ps", {})));
  doc["msg_type"] = "JobCancel";
  CHECK_THROWS_AS(parse_envelope(doc.dump()), ProtocolError);
  doc["msg_type"] = "JobAbort";
  doc["version"] = 2;
  CHECK_THROWS_AS(parse_envelope(doc.dump()), ProtocolError);
  doc["version"] = 1;
  doc.erase("sender_id");
  CHECK_THROWS_AS(parse_envelope(doc.dump()), ProtocolError);
}

TEST_CASE("oversized messages are refused, not truncated") {
  Envelope e = make_envelope(MsgType::job_reply, "e", 1, "a", {});
  e.payload = {{"blob", std::string(kMaxPayloadBytes, 'x')}};
  CHECK_THROWS_AS(serialize(e), ProtocolError);
  CHECK_THROWS_AS(parse_envelope(std::string(kMaxPayloadBytes + 1, ' ')), ProtocolError);
}

TEST_CASE("job request and reply payloads round trip") {
  const auto config = model::make_mlp_config(4, 2, 3, model::Activation::tanh, 0.5);
  JobRequest req;
  req.model_config = config;
  req.training.learning_rate = 0.0005;
  req.algorithm.kind = algo::AlgorithmKind::scaffold;
  req.algorithm.local_lr = 0.01;
  req.global_weights = model::build_model(config, 1);
  req.scaffold_c = req.global_weights.zeros_like();
  req.pre_eval = true;
  const JobRequest r2 = job_request_from_json(util::Json::parse(util::Json(to_json(req)).dump()));
  CHECK(r2.global_weights.bitwise_equal(req.global_weights));
  CHECK(r2.scaffold_c->bitwise_equal(*req.scaffold_c));
  CHECK(r2.training.learning_rate == 0.0005);
  CHECK(r2.algorithm.kind == algo::AlgorithmKind::scaffold);
  CHECK(r2.model_config.layers.size() == 3);
  CHECK(r2.pre_eval);

  JobReply rep;
  rep.new_weights = req.global_weights;
  rep.n_train_samples = 77;
  rep.completed_epochs = 1;
  rep.steps = 3;
  rep.post_eval = model::EvalMetrics{0.5, 0.25, 0.5, 1.0 / 3.0, 0.4, 10, 0.5};
  const JobReply p2 = job_reply_from_json(to_json(rep));
  CHECK(p2.n_train_samples == 77);
  CHECK(p2.post_eval->auprc == 0.4);
  CHECK_FALSE(p2.pre_eval);
  CHECK_FALSE(p2.delta_c);

  CHECK_THROWS_AS(job_reply_from_json({{"n_train_samples", 1}}), ProtocolError);
  CHECK_THROWS_AS(model_reply_from_json({{"final_round", 1}}), ProtocolError);
}

TEST_CASE("status and rejection payloads round trip") {
  StatusReport s{"ps", Role::parameter_server, NodeState::aggregating, "e", 3, "2024-01-01T00:00:00.000Z", ""};
  const auto s2 = status_report_from_json(to_json(s));
  CHECK(s2.state == NodeState::aggregating);
  CHECK(s2.role == Role::parameter_server);
  CHECK(s2.round == 3);

  ExperimentRejected rej{"invalid", {{"settings/algorithm/mu", "required field is missing"}}};
  CHECK(experiment_rejected_from_json(to_json(rej)).errors == rej.errors);
}
