#pragma once

// JSON HTTP API:
//   GET  /api/models   -> [{"id","display_name"}]
//   GET  /api/health   -> {"status":"ok","max_tokens_limit":N,"backends":{id: bool}}
//   POST /api/extract  -> extraction response (see Pipeline::to_json)
// Errors are {"error": message} with 400/404/413/502/504.

#include <future>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "rena/config.hpp"
#include "rena/inference_client.hpp"
#include "rena/pipeline.hpp"

namespace rena {

/// HTTP status for a failed extraction.
inline int status_for(const std::exception& e) {
  if (const auto* r = dynamic_cast<const RequestError*>(&e)) return r->status();
  if (dynamic_cast<const UnknownModel*>(&e)) return 404;
  if (dynamic_cast<const InvalidGenerationRequest*>(&e)) return 400;
  if (dynamic_cast<const BackendTimeout*>(&e)) return 504;
  if (dynamic_cast<const InferenceError*>(&e)) return 502;
  return 500;
}

class Service {
 public:
  Service(const Pipeline& pipeline, ServiceConfig config) : pipeline_(pipeline), config_(std::move(config)) {
    if (pipeline_.client().registry().empty()) throw std::runtime_error("refusing to start: no models configured");
    routes();
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  bool listen() { return server_.listen(config_.host, config_.port); }

  /// Binds the configured port (an ephemeral one when it is 0); returns the
  /// bound port, or -1.
  int bind() {
    if (config_.port == 0) return server_.bind_to_any_port(config_.host);
    return server_.bind_to_port(config_.host, config_.port) ? config_.port : -1;
  }
  bool listen_after_bind() { return server_.listen_after_bind(); }

  void stop() { server_.stop(); }
  void wait_until_ready() const { server_.wait_until_ready(); }

  nlohmann::ordered_json models_json() const {
    auto out = nlohmann::ordered_json::array();
    for (const auto& m : pipeline_.client().list_models()) {
      out.push_back({{"id", m.id}, {"display_name", m.display_name}});
    }
    return out;
  }

  /// Probes run concurrently, each bounded by the client's probe timeout.
  nlohmann::ordered_json health_json() const {
    const auto models = pipeline_.client().list_models();
    std::vector<std::future<bool>> probes;
    probes.reserve(models.size());
    for (const auto& m : models) {
      probes.push_back(std::async(std::launch::async, [this, m] { return pipeline_.client().probe(m); }));
    }
    nlohmann::ordered_json j;
    j["status"] = "ok";
    j["max_tokens_limit"] = pipeline_.limits().max_tokens_limit;
    auto& backends = j["backends"] = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < models.size(); ++i) backends[models[i].id] = probes[i].get();
    return j;
  }

 private:
  static void send_json(httplib::Response& res, int status, const nlohmann::ordered_json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, int status, const std::string& message) {
    nlohmann::ordered_json j;
    j["error"] = message;
    send_json(res, status, j);
  }

  void routes() {
    server_.set_default_headers({
        {"Access-Control-Allow-Origin", config_.cors_origin},
        {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
        {"Access-Control-Allow-Headers", "Content-Type"},
    });
    // JSON escaping can double the article; the exact byte limit is enforced
    // on the decoded article.
    server_.set_payload_max_length(config_.max_article_bytes * 2 + 65536);

    server_.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server_.Get("/api/models", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, models_json());
    });

    server_.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, health_json());
    });

    server_.Post("/api/extract", [this](const httplib::Request& req, httplib::Response& res) {
      try {
        auto request = pipeline_.parse_request(req.body);
        send_json(res, 200, Pipeline::to_json(pipeline_.extract(request)));
      } catch (const std::exception& e) {
        send_error(res, status_for(e), e.what());
      }
    });

    if (!config_.static_dir.empty()) server_.set_mount_point("/", config_.static_dir);
  }

  const Pipeline& pipeline_;
  ServiceConfig config_;
  httplib::Server server_;
};

}  // namespace rena
