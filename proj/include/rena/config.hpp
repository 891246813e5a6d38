#pragma once

// Service configuration file: a small TOML subset.
//
//   [service]
//   host = "127.0.0.1"
//   port = 8080
//   max_tokens_limit = 4096
//   default_max_tokens = 512
//   max_article_bytes = 1048576
//   cors_origin = "*"
//   request_timeout_ms = 120000
//   retries = 2
//   initial_backoff_ms = 250
//   probe_timeout_ms = 1000
//   static_dir = "webui/dist"
//
//   [[model]]
//   id = "openorca-platypus2-13b"
//   display_name = "OpenOrca-Platypus2-13B"
//   endpoint = "http://127.0.0.1:8001"      # or "stub:" for the offline stub
//   kind = "completion"                      # or "chat"
//   served_name = "Open-Orca/OpenOrca-Platypus2-13B"
//   template = "inference"                   # or "annotation"
//
// Supported values: double-quoted strings (\" \\ \n \t escapes), integers,
// booleans. '#' starts a comment outside strings.
//
// Environment overrides: RENA_PORT, and RENA_ENDPOINT_<ID> where <ID> is the
// model id upper-cased with non-alphanumerics replaced by '_'.

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include "rena/inference_client.hpp"
#include "rena/prompting.hpp"
#include "rena/text.hpp"

namespace rena {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  // Anchored to the fine-tuning sequence length.
  int max_tokens_limit = 4096;
  int default_max_tokens = 512;
  std::size_t max_article_bytes = 1 << 20;
  std::string cors_origin = "*";
  std::string static_dir;
  ClientOptions client;
  ModelRegistry models = default_registry();
};

namespace detail {

using ConfigValue = std::variant<std::string, std::int64_t, bool>;

inline std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (in_str && line[i] == '\\') {
      ++i;
      continue;
    }
    if (line[i] == '"') in_str = !in_str;
    if (!in_str && line[i] == '#') return line.substr(0, i);
  }
  return line;
}

inline ConfigValue parse_value(const std::string& raw, std::size_t lineno) {
  auto fail = [&](const std::string& why) { return ConfigError("line " + std::to_string(lineno) + ": " + why); };
  if (raw.empty()) throw fail("missing value");
  if (raw.front() == '"') {
    std::string out;
    std::size_t i = 1;
    for (; i < raw.size() && raw[i] != '"'; ++i) {
      if (raw[i] == '\\' && i + 1 < raw.size()) {
        char e = raw[++i];
        out.push_back(e == 'n' ? '\n' : e == 't' ? '\t' : e);
      } else {
        out.push_back(raw[i]);
      }
    }
    if (i >= raw.size()) throw fail("unterminated string");
    if (!text::trim(raw.substr(i + 1)).empty()) throw fail("trailing characters after string");
    return out;
  }
  if (raw == "true") return true;
  if (raw == "false") return false;
  std::string digits = raw;
  std::erase(digits, '_');
  char* end = nullptr;
  const long long v = std::strtoll(digits.c_str(), &end, 10);
  if (end == digits.c_str() || *end != '\0') throw fail("unsupported value '" + raw + "'");
  return static_cast<std::int64_t>(v);
}

template <class T>
T expect(const ConfigValue& v, const std::string& key) {
  if (const auto* p = std::get_if<T>(&v)) return *p;
  throw ConfigError("key '" + key + "' has the wrong type");
}

}  // namespace detail

inline std::string endpoint_env_var(std::string_view model_id) {
  std::string name = "RENA_ENDPOINT_";
  for (char c : model_id) {
    name.push_back(std::isalnum(static_cast<unsigned char>(c)) ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : '_');
  }
  return name;
}

/// A file without [[model]] tables yields an empty registry.
inline ServiceConfig parse_config(std::istream& in) {
  ServiceConfig cfg;
  cfg.models = ModelRegistry{};
  enum class Section { none, service, model } section = Section::none;
  std::optional<std::map<std::string, detail::ConfigValue>> model;

  auto finish_model = [&] {
    if (!model) return;
    auto& m = *model;
    auto str = [&](const std::string& k, std::optional<std::string> fallback = std::nullopt) {
      auto it = m.find(k);
      if (it == m.end()) {
        if (fallback) return *fallback;
        throw ConfigError("[[model]] is missing '" + k + "'");
      }
      return detail::expect<std::string>(it->second, k);
    };
    ModelSpec spec;
    spec.id = str("id");
    spec.display_name = str("display_name", spec.id);
    spec.endpoint = str("endpoint");
    auto kind = kind_from_name(str("kind", std::string("completion")));
    if (!kind) throw ConfigError("model '" + spec.id + "': kind must be chat or completion");
    spec.kind = *kind;
    spec.served_name = str("served_name", std::string{});
    try {
      spec.prompt_template = template_id_from_name(str("template", std::string("inference")));
    } catch (const PromptError& e) {
      throw ConfigError("model '" + spec.id + "': " + e.what());
    }
    if (spec.prompt_template == TemplateId::synthesis) {
      throw ConfigError("model '" + spec.id + "': synthesis template takes no article");
    }
    try {
      cfg.models.add(std::move(spec));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    model.reset();
  };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = text::trim(detail::strip_comment(line));
    if (s.empty()) continue;
    if (s == "[[model]]") {
      finish_model();
      section = Section::model;
      model.emplace();
      continue;
    }
    if (s == "[service]") {
      finish_model();
      section = Section::service;
      continue;
    }
    if (s.front() == '[') throw ConfigError("line " + std::to_string(lineno) + ": unknown section " + s);
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = text::trim(s.substr(0, eq));
    const auto value = detail::parse_value(text::trim(s.substr(eq + 1)), lineno);
    if (section == Section::model) {
      (*model)[key] = value;
    } else if (section == Section::service) {
      using detail::expect;
      auto positive = [&](std::int64_t v) {
        if (v < 1) throw ConfigError("key '" + key + "' must be positive");
        return v;
      };
      if (key == "host") cfg.host = expect<std::string>(value, key);
      else if (key == "port") cfg.port = static_cast<int>(expect<std::int64_t>(value, key));
      else if (key == "max_tokens_limit") cfg.max_tokens_limit = static_cast<int>(positive(expect<std::int64_t>(value, key)));
      else if (key == "default_max_tokens") cfg.default_max_tokens = static_cast<int>(positive(expect<std::int64_t>(value, key)));
      else if (key == "max_article_bytes") cfg.max_article_bytes = static_cast<std::size_t>(positive(expect<std::int64_t>(value, key)));
      else if (key == "cors_origin") cfg.cors_origin = expect<std::string>(value, key);
      else if (key == "static_dir") cfg.static_dir = expect<std::string>(value, key);
      else if (key == "request_timeout_ms") cfg.client.timeout = std::chrono::milliseconds(positive(expect<std::int64_t>(value, key)));
      else if (key == "retries") cfg.client.retries = static_cast<int>(expect<std::int64_t>(value, key));
      else if (key == "initial_backoff_ms") cfg.client.initial_backoff = std::chrono::milliseconds(expect<std::int64_t>(value, key));
      else if (key == "probe_timeout_ms") cfg.client.probe_timeout = std::chrono::milliseconds(positive(expect<std::int64_t>(value, key)));
      else throw ConfigError("line " + std::to_string(lineno) + ": unknown [service] key '" + key + "'");
    } else {
      throw ConfigError("line " + std::to_string(lineno) + ": key outside of a section");
    }
  }
  finish_model();
  if (cfg.client.retries < 0) throw ConfigError("retries must be >= 0");
  if (cfg.default_max_tokens > cfg.max_tokens_limit) cfg.default_max_tokens = cfg.max_tokens_limit;
  return cfg;
}

inline ServiceConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return parse_config(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

inline std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

inline void apply_env_overrides(ServiceConfig& cfg, const EnvLookup& env = process_env) {
  if (auto port = env("RENA_PORT")) {
    try {
      cfg.port = std::stoi(*port);
    } catch (const std::exception&) {
      throw ConfigError("RENA_PORT is not a number: " + *port);
    }
  }
  for (const auto& spec : cfg.models.list()) {
    if (auto url = env(endpoint_env_var(spec.id))) cfg.models.find(spec.id)->endpoint = *url;
  }
}

}  // namespace rena
