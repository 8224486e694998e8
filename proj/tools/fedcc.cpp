// Control center: `serve` runs the broker-facing service and its HTTP API;
// the other subcommands are clients of that API.
#include <chrono>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <httplib.h>

#include "fedplat/cc/http_api.hpp"
#include "tool_support.hpp"

using namespace fedplat;
using util::Json;

namespace {

struct Endpoint {
  std::string host = "127.0.0.1";
  int port = 8080;
};

Endpoint parse_url(const std::string& url) {
  std::string rest = url;
  if (rest.rfind("http://", 0) == 0) rest = rest.substr(7);
  while (!rest.empty() && rest.back() == '/') rest.pop_back();
  Endpoint e;
  const auto colon = rest.rfind(':');
  if (colon == std::string::npos) {
    e.host = rest;
    e.port = 80;
  } else {
    e.host = rest.substr(0, colon);
    e.port = std::stoi(rest.substr(colon + 1));
  }
  return e;
}

struct Response {
  int status = 0;
  Json body;
};

Response call(const Endpoint& ep, const std::string& method, const std::string& path, const std::string& body = "") {
  httplib::Client client(ep.host, ep.port);
  client.set_read_timeout(60, 0);
  auto r = method == "GET" ? client.Get(path) : client.Post(path, body, "application/json");
  if (!r) throw std::runtime_error(fmt::format("control center at {}:{} unreachable", ep.host, ep.port));
  return {r->status, Json::parse(r->body, nullptr, false)};
}

std::string cell(const Json& v) {
  if (v.is_null()) return "-";
  if (v.is_string()) return v.get<std::string>().empty() ? "-" : v.get<std::string>();
  return v.dump();
}

void print_network(const Json& net) {
  std::cout << fmt::format("{:<16} {:<20} {:<12} {:<24} {:>5}  {:<26} {}\n", "CLIENT", "ROLE", "STATE", "EXPERIMENT",
                           "ROUND", "LAST SEEN", "FLAGS");
  for (const auto& n : net.at("nodes")) {
    std::string flags;
    if (n.value("stale", false)) flags += "stale ";
    if (n.value("unknown", false)) flags += "unknown ";
    if (!cell(n.at("diagnostic")).empty() && cell(n.at("diagnostic")) != "-") flags += n.at("diagnostic").get<std::string>();
    std::cout << fmt::format("{:<16} {:<20} {:<12} {:<24} {:>5}  {:<26} {}\n", cell(n.at("client_id")),
                             cell(n.at("role")), cell(n.at("state")), cell(n.at("experiment_id")), cell(n.at("round")),
                             cell(n.at("last_seen")), flags);
  }
}

void print_experiment(const Json& e) {
  std::cout << fmt::format("{:<38} {:<14} round {}/{}", cell(e.at("experiment_id")), cell(e.at("status")),
                           cell(e.at("current_round")), cell(e.at("rounds_total")));
  const auto& m = e.at("last_metrics");
  if (m.is_object() && m.contains("auprc")) {
    std::cout << fmt::format("  loss {:.4f} auprc {:.4f}", m.value("loss", 0.0), m.value("auprc", 0.0));
  }
  if (!e.at("final_round").is_null()) std::cout << "  final round " << e.at("final_round").dump();
  if (!cell(e.at("diagnostic")).empty() && cell(e.at("diagnostic")) != "-") std::cout << "  (" << cell(e.at("diagnostic")) << ")";
  std::cout << "\n";
}

bool terminal(const std::string& status) {
  return status == "completed" || status == "stopped_early" || status == "failed" || status == "rejected";
}

int serve(const std::filesystem::path& config, const std::string& id, const std::string& bind, int port) {
  const auto signals = tools::block_shutdown_signals();
  const auto f = deploy::load_federation(config);
  const auto& self = f.node(id);
  auto broker = tools::external_broker(f);
  cc::ControlCenter center(deploy::cc_config(f, id), broker->connect(id));
  center.start();
  cc::HttpApi api(center, f.artifacts_for(self));
  const int bound = api.start(bind.empty() ? self.http_host : bind, port >= 0 ? port : self.http_port);
  std::cout << "listening on " << (bind.empty() ? self.http_host : bind) << ":" << bound << std::endl;
  tools::wait_for_shutdown(signals);
  api.stop();
  center.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fedcc: control center"};
  app.require_subcommand(1);
  std::string level = "info";
  std::string url = "http://127.0.0.1:8080";
  app.add_option("--log-level", level);
  app.add_option("--url", url, "control center HTTP API (client subcommands)");

  auto* serve_cmd = app.add_subcommand("serve", "run the control center and its HTTP API");
  std::filesystem::path config;
  std::string id = "control-center";
  std::string bind;
  int port = -1;
  serve_cmd->add_option("-c,--config", config, "federation file")->required()->check(CLI::ExistingFile);
  serve_cmd->add_option("--id", id, "own client id in the federation file");
  serve_cmd->add_option("--bind", bind, "HTTP bind address (default from the federation file)");
  serve_cmd->add_option("--port", port, "HTTP port (default from the federation file)");

  double interval = 2.0;
  auto* submit_cmd = app.add_subcommand("submit", "validate and submit an experiment request");
  std::filesystem::path spec_file;
  bool wait = false;
  submit_cmd->add_option("--interval", interval, "seconds between polls with --wait")->check(CLI::PositiveNumber);
  submit_cmd->add_option("spec", spec_file, "experiment request (model_config and settings)")
      ->required()
      ->check(CLI::ExistingFile);
  submit_cmd->add_flag("--wait", wait, "follow the experiment until it ends");

  auto* status_cmd = app.add_subcommand("status", "network and experiment overview");
  std::string status_id;
  bool as_json = false;
  status_cmd->add_option("experiment", status_id, "show one experiment");
  status_cmd->add_flag("--json", as_json);

  auto* watch_cmd = app.add_subcommand("watch", "follow an experiment round by round");
  std::string watch_id;
  watch_cmd->add_option("experiment", watch_id)->required();
  watch_cmd->add_option("--interval", interval, "seconds between polls")->check(CLI::PositiveNumber);

  auto* fetch_cmd = app.add_subcommand("fetch-model", "fetch the final model into the CC artifact store");
  std::string fetch_id;
  fetch_cmd->add_option("experiment", fetch_id)->required();

  CLI11_PARSE(app, argc, argv);
  tools::set_log_level(level);

  auto watch = [&](const std::string& exp) {
    const Endpoint ep = parse_url(url);
    std::size_t printed = 0;
    for (;;) {
      const auto r = call(ep, "GET", "/api/experiments/" + exp);
      if (r.status == 404) {
        std::cerr << "fedcc: unknown experiment " << exp << "\n";
        return 1;
      }
      const auto& rounds = r.body.at("rounds");
      for (; printed < rounds.size(); ++printed) std::cout << rounds[printed].dump() << "\n";
      const std::string status = r.body.at("status");
      if (terminal(status)) {
        print_experiment(r.body);
        return status == "failed" || status == "rejected" ? 1 : 0;
      }
      std::this_thread::sleep_for(std::chrono::duration<double>(interval));
    }
  };

  try {
    if (*serve_cmd) return serve(config, id, bind, port);
    const Endpoint ep = parse_url(url);
    if (*submit_cmd) {
      std::ifstream in(spec_file);
      const auto body = Json::parse(in, nullptr, false);
      if (body.is_discarded()) {
        std::cerr << "fedcc: " << spec_file.string() << " is not JSON\n";
        return 2;
      }
      const auto r = call(ep, "POST", "/api/experiments", body.dump());
      if (r.status == 201) {
        const std::string exp = r.body.at("experiment_id");
        std::cout << exp << "\n";
        return wait ? watch(exp) : 0;
      }
      if (r.status == 400) {
        std::cerr << "fedcc: experiment rejected";
        if (!r.body.value("reason", "").empty()) std::cerr << ": " << r.body.value("reason", "");
        std::cerr << "\n";
        for (const auto& e : r.body.value("errors", Json::array())) {
          std::cerr << "  " << e.value("path", "") << ": " << e.value("message", "") << "\n";
        }
        return 2;
      }
      std::cerr << "fedcc: " << r.status << " " << r.body.value("error", "") << "\n";
      return 1;
    }
    if (*status_cmd) {
      if (!status_id.empty()) {
        const auto r = call(ep, "GET", "/api/experiments/" + status_id);
        if (r.status == 404) {
          std::cerr << "fedcc: unknown experiment " << status_id << "\n";
          return 1;
        }
        if (as_json) {
          std::cout << r.body.dump(2) << "\n";
        } else {
          print_experiment(r.body);
        }
        return 0;
      }
      const auto net = call(ep, "GET", "/api/network");
      const auto exps = call(ep, "GET", "/api/experiments");
      if (as_json) {
        std::cout << Json{{"network", net.body}, {"experiments", exps.body.at("experiments")}}.dump(2) << "\n";
        return 0;
      }
      print_network(net.body);
      std::cout << "\n";
      for (const auto& e : exps.body.at("experiments")) print_experiment(e);
      return 0;
    }
    if (*watch_cmd) return watch(watch_id);
    if (*fetch_cmd) {
      const auto r = call(ep, "POST", "/api/experiments/" + fetch_id + "/model");
      if (r.status != 200) {
        std::cerr << "fedcc: " << r.status << " " << r.body.value("error", "") << "\n";
        return 1;
      }
      std::cout << r.body.at("path").get<std::string>() << "\n";
      return 0;
    }
  } catch (const util::ValidationError& e) {
    std::cerr << "fedcc: invalid federation file\n";
    tools::print_validation(e);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "fedcc: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
