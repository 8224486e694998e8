#include "fedplat/cc/http_api.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace fedplat::cc {

namespace {

void reply(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

Json error_body(const std::string& message) { return {{"error", message}}; }

}  // namespace

HttpApi::HttpApi(ControlCenter& cc, std::filesystem::path artifact_root)
    : cc_(cc), artifact_root_(std::move(artifact_root)), server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;

  s.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, {{"status", "ok"}, {"client_id", cc_.config().client_id}, {"prefix", cc_.config().prefix}});
  });

  s.Get("/api/network", [this](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, to_json(cc_.network()));
  });

  s.Get("/api/experiments", [this](const httplib::Request&, httplib::Response& res) {
    Json list = Json::array();
    for (const auto& e : cc_.experiments()) list.push_back(to_json(e));
    reply(res, 200, {{"experiments", list}});
  });

  s.Get(R"(/api/experiments/([A-Za-z0-9._-]+))", [this](const httplib::Request& req, httplib::Response& res) {
    auto e = cc_.experiment(req.matches[1]);
    if (!e) return reply(res, 404, error_body("unknown experiment"));
    reply(res, 200, to_json(*e));
  });

  s.Post("/api/experiments", [this](const httplib::Request& req, httplib::Response& res) {
    const Json input = Json::parse(req.body, nullptr, false);
    if (input.is_discarded()) {
      return reply(res, 400, {{"valid", false}, {"errors", {{{"path", ""}, {"message", "body is not JSON"}}}}});
    }
    const SubmitResult r = cc_.submit(input);
    switch (r.outcome) {
      case SubmitOutcome::accepted:
        return reply(res, 201, {{"experiment_id", r.experiment_id}});
      case SubmitOutcome::invalid:
      case SubmitOutcome::rejected:
        return reply(res, 400, {{"valid", false}, {"errors", util::to_json(r.errors)}, {"reason", r.reason}});
      case SubmitOutcome::busy:
        return reply(res, 409, error_body("busy"));
      case SubmitOutcome::timeout:
        return reply(res, 504, error_body(r.reason));
    }
  });

  s.Post(R"(/api/experiments/([A-Za-z0-9._-]+)/model)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto path = artifact_root_ / "models" / (id + ".weights");
    try {
      const std::size_t round = cc_.request_final_model(id, path);
      reply(res, 200, {{"experiment_id", id}, {"path", path.string()}, {"final_round", round}});
    } catch (const CcError& ex) {
      switch (ex.kind()) {
        case CcError::Kind::not_finalized: return reply(res, 409, error_body(ex.what()));
        case CcError::Kind::unknown_experiment: return reply(res, 404, error_body(ex.what()));
        case CcError::Kind::timeout: return reply(res, 504, error_body(ex.what()));
        case CcError::Kind::io: return reply(res, 500, error_body(ex.what()));
      }
    }
  });

  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& ex) {
      reply(res, 500, error_body(ex.what()));
    }
  });
}

HttpApi::~HttpApi() { stop(); }

int HttpApi::start(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  spdlog::info("cc: http api on {}:{}", host, bound);
  return bound;
}

void HttpApi::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace fedplat::cc
