#pragma once

// Single extraction path shared by the HTTP service and the CLI:
// render prompt -> generate -> parse -> locate entities -> response.

#include <chrono>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rena/annotate.hpp"
#include "rena/config.hpp"
#include "rena/inference_client.hpp"
#include "rena/output_parser.hpp"
#include "rena/prompting.hpp"
#include "rena/schema.hpp"

namespace rena {

struct ExtractRequest {
  std::string article;
  std::string model;
  int max_tokens = 512;
};

struct ExtractResponse {
  std::string raw;
  ParseReport report;
  AnnotatedDocument annotated;
  std::int64_t timing_ms = 0;
};

/// Rejected request; status is the HTTP code the service answers with.
class RequestError : public std::runtime_error {
 public:
  RequestError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

struct PipelineLimits {
  int max_tokens_limit = 4096;
  int default_max_tokens = 512;
  std::size_t max_article_bytes = 1 << 20;
};

/// Entities of the accepted triples, deduplicated, in first-seen order.
inline std::vector<Entity> entity_table(const std::vector<RelationTriple>& triples) {
  std::vector<Entity> out;
  std::set<Entity> seen;
  for (const auto& t : triples) {
    for (const auto* e : {&t.subject, &t.object}) {
      if (seen.insert(*e).second) out.push_back(*e);
    }
  }
  return out;
}

class Pipeline {
 public:
  Pipeline(InferenceClient client, PipelineLimits limits, RelationSchema schema = default_schema(),
           TemplateStore templates = TemplateStore::builtin(), ParseOptions parse_options = {})
      : client_(std::move(client)),
        limits_(limits),
        schema_(std::move(schema)),
        templates_(std::move(templates)),
        parse_options_(parse_options) {}

  const InferenceClient& client() const noexcept { return client_; }
  const PipelineLimits& limits() const noexcept { return limits_; }
  const RelationSchema& schema() const noexcept { return schema_; }

  /// Reads {"article", "model", "max_tokens"?}; throws RequestError(400).
  ExtractRequest parse_request(const std::string& body) const {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw RequestError(400, std::string("invalid JSON body: ") + e.what());
    }
    if (!j.is_object()) throw RequestError(400, "request body must be a JSON object");
    ExtractRequest req;
    if (!j.contains("article") || !j["article"].is_string()) throw RequestError(400, "\"article\" must be a string");
    if (!j.contains("model") || !j["model"].is_string()) throw RequestError(400, "\"model\" must be a string");
    req.article = j["article"].get<std::string>();
    req.model = j["model"].get<std::string>();
    req.max_tokens = limits_.default_max_tokens;
    if (j.contains("max_tokens")) {
      if (!j["max_tokens"].is_number_integer()) throw RequestError(400, "\"max_tokens\" must be an integer");
      const auto v = j["max_tokens"].get<std::int64_t>();
      if (v < 1 || v > limits_.max_tokens_limit) {
        throw RequestError(400, "\"max_tokens\" must be in [1, " + std::to_string(limits_.max_tokens_limit) + "]");
      }
      req.max_tokens = static_cast<int>(v);
    }
    return req;
  }

  void validate(const ExtractRequest& req) const {
    if (req.article.size() > limits_.max_article_bytes) {
      throw RequestError(413, "article exceeds " + std::to_string(limits_.max_article_bytes) + " bytes");
    }
    if (text::trim(req.article).empty()) throw RequestError(400, "article is empty");
    if (req.max_tokens < 1 || req.max_tokens > limits_.max_tokens_limit) {
      throw RequestError(400, "max_tokens must be in [1, " + std::to_string(limits_.max_tokens_limit) + "]");
    }
    if (!client_.registry().find(req.model)) throw RequestError(404, "unknown model: " + req.model);
  }

  /// Throws RequestError for bad input and InferenceError for backend failures.
  ExtractResponse extract(const ExtractRequest& req) const {
    validate(req);
    const auto started = std::chrono::steady_clock::now();
    const ModelSpec& spec = client_.registry().at(req.model);
    GenerationRequest gen;
    gen.model = spec.id;
    gen.prompt = templates_.render(spec.prompt_template, req.article);
    gen.max_tokens = req.max_tokens;
    auto generated = client_.generate(gen);

    ExtractResponse resp;
    resp.raw = std::move(generated.raw.text);
    resp.report = parse_output({resp.raw, spec.id}, schema_, parse_options_);
    resp.annotated = locate_entities(req.article, entity_table(resp.report.triples));
    resp.timing_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
    return resp;
  }

  static nlohmann::ordered_json to_json(const ExtractResponse& r) {
    nlohmann::ordered_json j;
    j["raw"] = r.raw;
    j["relations"] = report_to_json(r.report);
    j["annotated"] = annotated_to_json(r.annotated);
    auto& ents = j["entity_table"] = nlohmann::ordered_json::array();
    for (const auto& e : entity_table(r.report.triples)) ents.push_back(entity_to_json(e));
    auto& rels = j["relation_table"] = nlohmann::ordered_json::array();
    for (const auto& t : r.report.triples) {
      nlohmann::ordered_json row;
      row["subject"] = t.subject.surface;
      row["subject_type"] = canonical_name(t.subject.type);
      row["relation"] = surface_form(t.relation);
      row["object"] = t.object.surface;
      row["object_type"] = canonical_name(t.object.type);
      rels.push_back(std::move(row));
    }
    j["timing_ms"] = r.timing_ms;
    return j;
  }

 private:
  InferenceClient client_;
  PipelineLimits limits_;
  RelationSchema schema_;
  TemplateStore templates_;
  ParseOptions parse_options_;
};

inline PipelineLimits limits_from(const ServiceConfig& cfg) {
  return {cfg.max_tokens_limit, cfg.default_max_tokens, cfg.max_article_bytes};
}

}  // namespace rena
