#pragma once

// Training-data tooling: labeled examples, instruction/response records,
// train/validation split and the QLoRA trainer config.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rena/output_parser.hpp"
#include "rena/prompting.hpp"
#include "rena/schema.hpp"
#include "rena/text.hpp"

namespace rena {

inline constexpr std::string_view kNoRelationsSentinel = "No relations found.";

enum class Origin { synthetic, curated };

constexpr std::string_view origin_name(Origin o) { return o == Origin::synthetic ? "synthetic" : "curated"; }

struct LabeledExample {
  std::string doc_id;
  std::string article;
  std::vector<RelationTriple> triples;
  Origin origin = Origin::synthetic;

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

struct TrainingRecord {
  std::string prompt;
  std::string completion;
};

class ValidationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Schema used for training data: symmetric checks, extension pair allowed.
inline const RelationSchema& dataset_schema() {
  static const RelationSchema schema = default_schema({.host_deaths_extension = true});
  return schema;
}

/// Throws ValidationFailure unless every triple is legal and survives a trip
/// through the numbered line grammar unchanged.
inline void validate_example(const LabeledExample& ex) {
  const auto& schema = dataset_schema();
  for (std::size_t i = 0; i < ex.triples.size(); ++i) {
    const auto& t = ex.triples[i];
    auto verdict = schema.validate(t, ValidationMode::symmetric);
    if (!verdict.valid) throw ValidationFailure("triple " + std::to_string(i + 1) + ": " + verdict.reason);
    for (const auto* e : {&t.subject, &t.object}) {
      if (e->surface.find_first_of("\r\n") != std::string::npos) {
        throw ValidationFailure("triple " + std::to_string(i + 1) + ": surface text contains a line break");
      }
    }
    const auto declared = verdict.reversed ? reversed(t) : t;
    auto outcome = parse_line(format_triple_line(i + 1, declared), schema);
    const auto* parsed = std::get_if<ParsedLine>(&outcome);
    if (parsed == nullptr || parsed->triple != declared) {
      throw ValidationFailure("triple " + std::to_string(i + 1) +
                              ": surface text does not survive the line format");
    }
  }
}

/// Completion lists triples in declared direction, numbered from 1.
inline TrainingRecord to_training_record(const LabeledExample& ex,
                                         const TemplateStore& templates = builtin_templates()) {
  validate_example(ex);
  TrainingRecord rec;
  rec.prompt = templates.render(TemplateId::inference, ex.article).user;
  if (ex.triples.empty()) {
    rec.completion = std::string(kNoRelationsSentinel);
    return rec;
  }
  const auto& schema = dataset_schema();
  for (std::size_t i = 0; i < ex.triples.size(); ++i) {
    const auto& t = ex.triples[i];
    const bool rev = schema.validate(t, ValidationMode::symmetric).reversed;
    if (i) rec.completion += '\n';
    rec.completion += format_triple_line(i + 1, rev ? reversed(t) : t);
  }
  return rec;
}

inline nlohmann::ordered_json record_to_json(const TrainingRecord& r) {
  nlohmann::ordered_json j;
  j["prompt"] = r.prompt;
  j["completion"] = r.completion;
  return j;
}

/// Seeded Fisher-Yates over mt19937_64; the validation set is the first
/// ceil(N * val_fraction) shuffled items.
template <class T>
std::pair<std::vector<T>, std::vector<T>> split(std::span<const T> items, double val_fraction, std::uint64_t seed) {
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw std::invalid_argument("val_fraction must be in [0, 1)");
  }
  const std::size_t n = items.size();
  // Tolerance keeps e.g. 300 * 0.01 from rounding up to 4.
  const auto n_val = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * val_fraction - 1e-9));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  std::pair<std::vector<T>, std::vector<T>> out;
  out.second.reserve(n_val);
  out.first.reserve(n - n_val);
  for (std::size_t k = 0; k < n; ++k) {
    (k < n_val ? out.second : out.first).push_back(items[order[k]]);
  }
  return out;
}

template <class T>
std::pair<std::vector<T>, std::vector<T>> split(const std::vector<T>& items, double val_fraction,
                                                std::uint64_t seed) {
  return split(std::span<const T>(items), val_fraction, seed);
}

/// QLoRA hyperparameters used to fine-tune both extraction models.
struct FinetuneConfig {
  std::string base_model;
  std::string model_type = "LlamaForCausalLM";
  std::string tokenizer_type = "LlamaTokenizer";
  bool is_llama_derived_model = true;
  bool load_in_8bit = false;
  bool load_in_4bit = true;
  bool strict = false;
  double val_set_size = 0.01;
  std::string adapter = "qlora";
  int sequence_len = 4096;
  bool sample_packing = true;
  bool pad_to_sequence_len = true;
  int lora_r = 64;
  int lora_alpha = 32;
  double lora_dropout = 0.05;
  bool lora_target_linear = true;
  int gradient_accumulation_steps = 4;
  int micro_batch_size = 1;
  int num_epochs = 3;
  std::string optimizer = "paged_adamw_32bit";
  std::string lr_scheduler = "cosine";
  double learning_rate = 0.0002;
  bool train_on_inputs = false;
  bool group_by_length = false;
  bool bf16 = false;
  bool fp16 = true;
  bool tf32 = false;
  bool gradient_checkpointing = true;
  int logging_steps = 1;
  bool flash_attention = false;
  int warmup_steps = 10;
  int eval_steps = 20;
  double weight_decay = 0.0;
  std::string bos_token = "<s>";
  std::string eos_token = "</s>";
  std::string unk_token = "<unk>";
};

namespace detail {

inline std::string yaml_value(bool b) { return b ? "true" : "false"; }
inline std::string yaml_value(int v) { return std::to_string(v); }
inline std::string yaml_value(const std::string& s) { return s; }

// Shortest round-trip form, always with a decimal point (0.0, 0.0002).
inline std::string yaml_value(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  std::string s(buf, end);
  if (s.find('.') == std::string::npos) s += ".0";
  return s;
}

inline std::string yaml_quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out + "\"";
}

}  // namespace detail

/// Key order follows the reference hyperparameter list; base_model comes first.
inline std::vector<std::pair<std::string, std::string>> config_entries(const FinetuneConfig& c) {
  using detail::yaml_value;
  return {
      {"base_model", detail::yaml_quoted(c.base_model)},
      {"model_type", yaml_value(c.model_type)},
      {"tokenizer_type", yaml_value(c.tokenizer_type)},
      {"is_llama_derived_model", yaml_value(c.is_llama_derived_model)},
      {"load_in_8bit", yaml_value(c.load_in_8bit)},
      {"load_in_4bit", yaml_value(c.load_in_4bit)},
      {"strict", yaml_value(c.strict)},
      {"val_set_size", yaml_value(c.val_set_size)},
      {"adapter", yaml_value(c.adapter)},
      {"sequence_len", yaml_value(c.sequence_len)},
      {"sample_packing", yaml_value(c.sample_packing)},
      {"pad_to_sequence_len", yaml_value(c.pad_to_sequence_len)},
      {"lora_r", yaml_value(c.lora_r)},
      {"lora_alpha", yaml_value(c.lora_alpha)},
      {"lora_dropout", yaml_value(c.lora_dropout)},
      {"lora_target_linear", yaml_value(c.lora_target_linear)},
      {"gradient_accumulation_steps", yaml_value(c.gradient_accumulation_steps)},
      {"micro_batch_size", yaml_value(c.micro_batch_size)},
      {"num_epochs", yaml_value(c.num_epochs)},
      {"optimizer", yaml_value(c.optimizer)},
      {"lr_scheduler", yaml_value(c.lr_scheduler)},
      {"learning_rate", yaml_value(c.learning_rate)},
      {"train_on_inputs", yaml_value(c.train_on_inputs)},
      {"group_by_length", yaml_value(c.group_by_length)},
      {"bf16", yaml_value(c.bf16)},
      {"fp16", yaml_value(c.fp16)},
      {"tf32", yaml_value(c.tf32)},
      {"gradient_checkpointing", yaml_value(c.gradient_checkpointing)},
      {"logging_steps", yaml_value(c.logging_steps)},
      {"flash_attention", yaml_value(c.flash_attention)},
      {"warmup_steps", yaml_value(c.warmup_steps)},
      {"eval_steps", yaml_value(c.eval_steps)},
      {"weight_decay", yaml_value(c.weight_decay)},
      {"special_tokens.bos_token", detail::yaml_quoted(c.bos_token)},
      {"special_tokens.eos_token", detail::yaml_quoted(c.eos_token)},
      {"special_tokens.unk_token", detail::yaml_quoted(c.unk_token)},
  };
}

/// YAML `key: value` lines (axolotl style); special tokens nest under
/// `special_tokens:`.
inline std::string emit_finetune_config(std::string_view base_model_id) {
  FinetuneConfig cfg;
  cfg.base_model = std::string(base_model_id);
  std::string out;
  bool in_special = false;
  for (const auto& [key, value] : config_entries(cfg)) {
    constexpr std::string_view kNested = "special_tokens.";
    if (key.rfind(kNested, 0) == 0) {
      if (!in_special) out += "special_tokens:\n";
      in_special = true;
      out += "  " + key.substr(kNested.size()) + ": " + value + "\n";
    } else {
      out += key + ": " + value + "\n";
    }
  }
  return out;
}

inline nlohmann::ordered_json example_to_json(const LabeledExample& ex) {
  nlohmann::ordered_json j;
  j["doc_id"] = ex.doc_id;
  j["article"] = ex.article;
  auto& ts = j["triples"] = nlohmann::ordered_json::array();
  for (const auto& t : ex.triples) ts.push_back(triple_to_json(t));
  j["origin"] = origin_name(ex.origin);
  return j;
}

inline LabeledExample example_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationFailure("example must be a JSON object");
  LabeledExample ex;
  ex.doc_id = j.value("doc_id", std::string{});
  ex.article = j.at("article").get<std::string>();
  for (const auto& t : j.at("triples")) ex.triples.push_back(triple_from_json(t));
  const auto origin = j.value("origin", std::string("synthetic"));
  if (origin == "synthetic") {
    ex.origin = Origin::synthetic;
  } else if (origin == "curated") {
    ex.origin = Origin::curated;
  } else {
    throw ValidationFailure("unknown origin \"" + origin + "\"");
  }
  validate_example(ex);
  return ex;
}

struct LineIssue {
  std::size_t line = 0;
  std::string message;
};

struct JsonlReadResult {
  std::vector<LabeledExample> examples;
  std::vector<LineIssue> errors;
};

/// Bad lines are collected, not thrown; blank lines are skipped.
inline JsonlReadResult read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  JsonlReadResult result;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      result.examples.push_back(example_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      result.errors.push_back({lineno, e.what()});
    }
  }
  return result;
}

/// Validates everything before touching the file.
inline void write_jsonl(const std::string& path, std::span<const LabeledExample> examples) {
  for (const auto& ex : examples) validate_example(ex);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& ex : examples) out << example_to_json(ex).dump() << '\n';
  if (!out) throw IoError("write failed for " + path);
}

inline void write_jsonl(const std::string& path, const std::vector<LabeledExample>& examples) {
  write_jsonl(path, std::span<const LabeledExample>(examples));
}

}  // namespace rena
