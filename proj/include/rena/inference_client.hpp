#pragma once

// Model registry and a client for OpenAI-compatible text-generation backends.
// Endpoints starting with "stub:" are served in-process by StubBackend.
// The network transport is pluggable; see rena/http_transport.hpp.

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rena/output_parser.hpp"
#include "rena/prompting.hpp"

namespace rena {

enum class ModelKind { chat, completion };

constexpr std::string_view kind_name(ModelKind k) { return k == ModelKind::chat ? "chat" : "completion"; }

inline std::optional<ModelKind> kind_from_name(std::string_view s) {
  if (s == "chat") return ModelKind::chat;
  if (s == "completion") return ModelKind::completion;
  return std::nullopt;
}

inline constexpr std::string_view kStubScheme = "stub:";

struct ModelSpec {
  std::string id;
  std::string display_name;
  std::string endpoint;  // base URL, or "stub:<anything>"
  ModelKind kind = ModelKind::completion;
  // Value of the "model" field sent to the backend; falls back to id.
  std::string served_name;
  TemplateId prompt_template = TemplateId::inference;

  bool is_stub() const { return endpoint.rfind(kStubScheme, 0) == 0; }
  const std::string& wire_model() const { return served_name.empty() ? id : served_name; }
};

class InferenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownModel : public InferenceError {
 public:
  explicit UnknownModel(const std::string& id) : InferenceError("unknown model: " + id), id_(id) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class InvalidGenerationRequest : public InferenceError {
 public:
  using InferenceError::InferenceError;
};

class BackendUnreachable : public InferenceError {
 public:
  BackendUnreachable(const std::string& endpoint, int attempts, const std::string& last_error)
      : InferenceError("backend " + endpoint + " unreachable after " + std::to_string(attempts) +
                       " attempt(s): " + last_error),
        attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

class BackendTimeout : public InferenceError {
 public:
  BackendTimeout(const std::string& endpoint, int attempts)
      : InferenceError("backend " + endpoint + " timed out after " + std::to_string(attempts) + " attempt(s)"),
        attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

class BackendError : public InferenceError {
 public:
  BackendError(int status, std::string body)
      : InferenceError("backend returned HTTP " + std::to_string(status)), status_(status), body_(std::move(body)) {}
  int status() const noexcept { return status_; }
  const std::string& body() const noexcept { return body_; }

 private:
  int status_;
  std::string body_;
};

class ModelRegistry {
 public:
  ModelRegistry() = default;
  explicit ModelRegistry(std::vector<ModelSpec> models) {
    for (auto& m : models) add(std::move(m));
  }

  void add(ModelSpec spec) {
    if (spec.id.empty()) throw std::invalid_argument("model id must not be empty");
    if (find(spec.id)) throw std::invalid_argument("duplicate model id: " + spec.id);
    models_.push_back(std::move(spec));
  }

  const ModelSpec* find(std::string_view id) const {
    for (const auto& m : models_) {
      if (m.id == id) return &m;
    }
    return nullptr;
  }

  ModelSpec* find(std::string_view id) {
    for (auto& m : models_) {
      if (m.id == id) return &m;
    }
    return nullptr;
  }

  const ModelSpec& at(std::string_view id) const {
    if (const auto* m = find(id)) return *m;
    throw UnknownModel(std::string(id));
  }

  /// Configuration order.
  const std::vector<ModelSpec>& list() const noexcept { return models_; }
  bool empty() const noexcept { return models_.empty(); }
  std::size_t size() const noexcept { return models_.size(); }

 private:
  std::vector<ModelSpec> models_;
};

/// The two fine-tuned extraction models, served locally on ports 8001/8002.
inline ModelRegistry default_registry() {
  return ModelRegistry({
      {"openorca-platypus2-13b", "OpenOrca-Platypus2-13B", "http://127.0.0.1:8001", ModelKind::completion,
       "Open-Orca/OpenOrca-Platypus2-13B", TemplateId::inference},
      {"mythical-destroyer-v2-l2-13b", "Mythical-Destroyer-V2-L2-13B", "http://127.0.0.1:8002",
       ModelKind::completion, "Sao10K/Mythical-Destroyer-V2-L2-13B", TemplateId::inference},
  });
}

inline std::vector<ModelSpec> list_models(const ModelRegistry& registry) { return registry.list(); }

struct GenerationRequest {
  std::string model;
  RenderedPrompt prompt;
  int max_tokens = 512;
  double temperature = 0.0;
};

struct GenerationResponse {
  RawModelOutput raw;
  std::int64_t latency_ms = 0;
  std::string backend_id;
};

struct HttpReply {
  int status = 0;
  std::string body;
};

enum class TransportFailure { connection, timeout };

class TransportError : public std::runtime_error {
 public:
  TransportError(TransportFailure kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  TransportFailure kind() const noexcept { return kind_; }

 private:
  TransportFailure kind_;
};

class Transport {
 public:
  virtual ~Transport() = default;
  /// Throws TransportError when no HTTP response was obtained.
  virtual HttpReply post_json(const std::string& base_url, const std::string& path, const std::string& body,
                              std::chrono::milliseconds timeout) = 0;
  /// True when the endpoint answers HTTP at all within the timeout.
  virtual bool probe(const std::string& base_url, std::chrono::milliseconds timeout) = 0;
};

/// Deterministic offline backend. Any prompt mentioning "avian influenza"
/// gets the one-shot example's five output lines; anything else gets the
/// empty-result sentinel.
struct StubBackend {
  static constexpr std::string_view kCannedCompletion =
      "1) \"infectious disease\": \"avian influenza (HPAI) virus (H5N1)\", \"relation\": \"located at\", "
      "\"location\": \"Saravane province\"\n"
      "2) \"infectious disease\": \"avian influenza (HPAI) virus (H5N1)\", \"relation\": \"located at\", "
      "\"location\": \"Khantharath\"\n"
      "3) \"syndrome\": \"fever, productive cough, difficulty breathing and runny nose\", \"relation\": "
      "\"occurred on\", \"event date\": \"13 October 2020\"\n"
      "4) \"overall confirmed deaths\": \"500\", \"relation\": \"deaths of\", \"host\": \"one-year-old female\"\n"
      "5) \"new confirmed cases\": \"two\", \"relation\": \"cases of\", \"infectious disease\": \"avian "
      "influenza (HPAI) virus (H5N1)\"";
  static constexpr std::string_view kEmptyCompletion = "No relations found.";

  static std::string complete(const RenderedPrompt& prompt) {
    constexpr std::string_view kTrigger = "avian influenza";
    const bool hit = prompt.user.find(kTrigger) != std::string::npos ||
                     (prompt.system && prompt.system->find(kTrigger) != std::string::npos);
    return std::string(hit ? kCannedCompletion : kEmptyCompletion);
  }
};

struct ClientOptions {
  std::chrono::milliseconds timeout{120'000};
  int retries = 2;
  std::chrono::milliseconds initial_backoff{250};
  double backoff_factor = 2.0;
  std::chrono::milliseconds probe_timeout{1'000};
};

class InferenceClient {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  InferenceClient(ModelRegistry registry, ClientOptions options, std::shared_ptr<Transport> transport,
                  Sleeper sleeper = {})
      : registry_(std::move(registry)),
        options_(options),
        transport_(std::move(transport)),
        sleeper_(sleeper ? std::move(sleeper) : Sleeper([](auto d) { std::this_thread::sleep_for(d); })) {}

  const ModelRegistry& registry() const noexcept { return registry_; }
  const ClientOptions& options() const noexcept { return options_; }

  std::vector<ModelSpec> list_models() const { return registry_.list(); }

  /// OpenAI-compatible body: chat kind sends messages, completion kind a
  /// single prompt string (system text, blank line, user text).
  static std::string build_payload(const ModelSpec& spec, const GenerationRequest& req) {
    nlohmann::ordered_json j;
    j["model"] = spec.wire_model();
    if (spec.kind == ModelKind::chat) {
      auto& msgs = j["messages"] = nlohmann::ordered_json::array();
      if (req.prompt.system) msgs.push_back({{"role", "system"}, {"content", *req.prompt.system}});
      msgs.push_back({{"role", "user"}, {"content", req.prompt.user}});
    } else {
      j["prompt"] = req.prompt.system ? *req.prompt.system + "\n\n" + req.prompt.user : req.prompt.user;
    }
    j["max_tokens"] = req.max_tokens;
    j["temperature"] = req.temperature;
    j["stream"] = false;
    return j.dump();
  }

  static std::string_view api_path(ModelKind kind) {
    return kind == ModelKind::chat ? "/v1/chat/completions" : "/v1/completions";
  }

  static std::string extract_text(ModelKind kind, const HttpReply& reply) {
    try {
      auto j = nlohmann::json::parse(reply.body);
      const auto& choice = j.at("choices").at(0);
      if (kind == ModelKind::chat) return choice.at("message").at("content").get<std::string>();
      return choice.at("text").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw BackendError(reply.status, reply.body);
    }
  }

  GenerationResponse generate(const GenerationRequest& req) const {
    if (req.max_tokens < 1) throw InvalidGenerationRequest("max_tokens must be >= 1");
    if (!(req.temperature >= 0.0)) throw InvalidGenerationRequest("temperature must be >= 0");
    const ModelSpec& spec = registry_.at(req.model);
    const auto started = std::chrono::steady_clock::now();
    auto elapsed = [&] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started)
          .count();
    };

    if (spec.is_stub()) {
      return {{StubBackend::complete(req.prompt), spec.id}, elapsed(), "stub"};
    }
    if (!transport_) throw BackendUnreachable(spec.endpoint, 0, "no transport configured");

    const std::string payload = build_payload(spec, req);
    const std::string path(api_path(spec.kind));
    auto backoff = options_.initial_backoff;
    const int attempts = options_.retries + 1;
    std::string last_error;
    bool last_was_timeout = false;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
      try {
        HttpReply reply = transport_->post_json(spec.endpoint, path, payload, options_.timeout);
        if (reply.status < 200 || reply.status >= 300) throw BackendError(reply.status, reply.body);
        return {{extract_text(spec.kind, reply), spec.id}, elapsed(), spec.endpoint};
      } catch (const TransportError& e) {
        last_error = e.what();
        last_was_timeout = e.kind() == TransportFailure::timeout;
      }
      if (attempt < attempts) {
        sleeper_(backoff);
        backoff = std::chrono::milliseconds(
            static_cast<std::int64_t>(static_cast<double>(backoff.count()) * options_.backoff_factor));
      }
    }
    if (last_was_timeout) throw BackendTimeout(spec.endpoint, attempts);
    throw BackendUnreachable(spec.endpoint, attempts, last_error);
  }

  bool probe(const ModelSpec& spec) const {
    if (spec.is_stub()) return true;
    if (!transport_) return false;
    try {
      return transport_->probe(spec.endpoint, options_.probe_timeout);
    } catch (const std::exception&) {
      return false;
    }
  }

 private:
  ModelRegistry registry_;
  ClientOptions options_;
  std::shared_ptr<Transport> transport_;
  Sleeper sleeper_;
};

}  // namespace rena
