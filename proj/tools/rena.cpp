// rena: command-line front end for the extraction pipeline.
//
// Exit codes: 0 success, 1 validation/usage error, 2 backend error.

#include <csignal>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rena/config.hpp"
#include "rena/dataset.hpp"
#include "rena/evaluation.hpp"
#include "rena/http_transport.hpp"
#include "rena/pipeline.hpp"
#include "rena/service.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidationError = 1;
constexpr int kBackendError = 2;

std::string read_input(const std::string& path) {
  if (path == "-") return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw rena::IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw rena::IoError("cannot write " + path);
  out << content;
}

rena::ServiceConfig load_service_config(const std::string& path) {
  rena::ServiceConfig cfg = path.empty() ? rena::ServiceConfig{} : rena::load_config(path);
  rena::apply_env_overrides(cfg);
  return cfg;
}

rena::Pipeline make_pipeline(const rena::ServiceConfig& cfg, bool strict, bool extension) {
  rena::InferenceClient client(cfg.models, cfg.client, std::make_shared<rena::HttplibTransport>());
  return rena::Pipeline(std::move(client), rena::limits_from(cfg),
                        rena::default_schema({.host_deaths_extension = extension}), rena::TemplateStore::builtin(),
                        {.strict = strict});
}

struct ExtractArgs {
  std::string model;
  int max_tokens = 0;
  std::string input = "-";
  std::string format = "json";
  std::string config;
  bool strict = false;
  bool extension = false;
};

int run_extract(const ExtractArgs& a) {
  auto cfg = load_service_config(a.config);
  auto pipeline = make_pipeline(cfg, a.strict, a.extension);
  rena::ExtractRequest req{read_input(a.input), a.model, a.max_tokens > 0 ? a.max_tokens : cfg.default_max_tokens};
  const auto resp = pipeline.extract(req);
  if (a.format == "raw") {
    std::cout << resp.raw << '\n';
  } else if (a.format == "annotated") {
    std::cout << rena::annotated_to_json(resp.annotated).dump() << '\n';
  } else {
    std::cout << rena::report_to_json(resp.report).dump() << '\n';
  }
  return kOk;
}

struct ServeArgs {
  std::string config;
  std::optional<int> port;
  std::string host;
  bool strict = false;
  bool extension = false;
};

rena::Service* g_service = nullptr;

int run_serve(const ServeArgs& a) {
  auto cfg = load_service_config(a.config);
  if (a.port) cfg.port = *a.port;
  if (!a.host.empty()) cfg.host = a.host;
  if (cfg.models.empty()) {
    std::cerr << "rena: refusing to start: no models configured\n";
    return kValidationError;
  }
  auto pipeline = make_pipeline(cfg, a.strict, a.extension);
  rena::Service service(pipeline, cfg);
  g_service = &service;
  std::signal(SIGINT, [](int) {
    if (g_service) g_service->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_service) g_service->stop();
  });
  const int port = service.bind();
  if (port < 0) {
    std::cerr << "rena: cannot bind " << cfg.host << ":" << cfg.port << '\n';
    return kBackendError;
  }
  std::cout << "listening on http://" << cfg.host << ":" << port << std::endl;
  service.listen_after_bind();
  g_service = nullptr;
  return kOk;
}

struct EvalArgs {
  std::string gold;
  std::string pred;
  std::string model = "model";
  bool json = false;
};

int run_eval(const EvalArgs& a) {
  const auto gold = rena::read_gold_jsonl(a.gold);
  std::map<std::string, rena::ParseReport> by_id;
  std::vector<rena::ParseReport> in_order;
  {
    std::ifstream in(a.pred);
    if (!in) throw rena::IoError("cannot open " + a.pred);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (rena::text::trim(line).empty()) continue;
      try {
        auto j = nlohmann::json::parse(line);
        auto report = rena::report_from_json(j);
        if (j.contains("doc_id")) {
          by_id[j["doc_id"].get<std::string>()] = report;
        } else {
          in_order.push_back(std::move(report));
        }
      } catch (const std::exception& e) {
        throw rena::ValidationFailure(a.pred + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
  }
  std::vector<std::pair<rena::GoldDocument, rena::ParseReport>> docs;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    rena::ParseReport pred;
    if (auto it = by_id.find(gold[i].doc_id); it != by_id.end()) {
      pred = it->second;
    } else if (i < in_order.size()) {
      pred = in_order[i];
    }
    docs.emplace_back(gold[i], std::move(pred));
  }
  const auto report = rena::evaluate_corpus(docs);
  if (a.json) {
    std::cout << rena::eval_report_to_json(report).dump(2) << '\n';
  } else {
    std::cout << rena::format_eval_table(a.model, report);
  }
  return kOk;
}

int report_line_errors(const std::string& path, const std::vector<rena::LineIssue>& errors) {
  for (const auto& e : errors) std::cerr << path << ":" << e.line << ": " << e.message << '\n';
  return errors.empty() ? kOk : kValidationError;
}

int run_gen_records(const std::string& input, const std::string& output) {
  auto corpus = rena::read_jsonl(input);
  std::string out;
  for (const auto& ex : corpus.examples) out += rena::record_to_json(rena::to_training_record(ex)).dump() + "\n";
  write_output(output, out);
  return report_line_errors(input, corpus.errors);
}

int run_split(const std::string& input, const std::string& train, const std::string& val, double fraction,
              std::uint64_t seed) {
  auto corpus = rena::read_jsonl(input);
  auto [train_set, val_set] = rena::split(corpus.examples, fraction, seed);
  rena::write_jsonl(train, train_set);
  rena::write_jsonl(val, val_set);
  std::cerr << "train: " << train_set.size() << ", validation: " << val_set.size() << '\n';
  return report_line_errors(input, corpus.errors);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relation extraction from infectious-disease news articles"};
  app.require_subcommand(1);

  ExtractArgs extract;
  auto* extract_cmd = app.add_subcommand("extract", "Run one article through the pipeline");
  extract_cmd->add_option("--model", extract.model, "Model id")->required();
  extract_cmd->add_option("--max-tokens", extract.max_tokens, "Generation limit")->check(CLI::PositiveNumber);
  extract_cmd->add_option("--input", extract.input, "Article file, '-' for stdin");
  extract_cmd->add_option("--format", extract.format, "Output view")
      ->check(CLI::IsMember({"raw", "json", "annotated"}));
  extract_cmd->add_option("--config", extract.config, "Service config file");
  extract_cmd->add_flag("--strict", extract.strict, "Reject reversed and duplicate triples");
  extract_cmd->add_flag("--allow-host-deaths", extract.extension, "Accept (death_number, deaths_of, people)");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Start the HTTP API");
  serve_cmd->add_option("--config", serve.config, "Service config file");
  serve_cmd->add_option("--port", serve.port, "Port (0 picks a free one)");
  serve_cmd->add_option("--host", serve.host, "Bind address");
  serve_cmd->add_flag("--strict", serve.strict, "Reject reversed and duplicate triples");
  serve_cmd->add_flag("--allow-host-deaths", serve.extension, "Accept (death_number, deaths_of, people)");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions against a gold corpus");
  eval_cmd->add_option("--gold", eval.gold, "Gold JSONL")->required();
  eval_cmd->add_option("--pred", eval.pred, "JSONL of parse reports, one per document")->required();
  eval_cmd->add_option("--model", eval.model, "Model name for the table");
  eval_cmd->add_flag("--json", eval.json, "Print the full JSON report");

  std::string records_in, records_out = "-";
  auto* records_cmd = app.add_subcommand("gen-records", "Build instruction/response training records");
  records_cmd->add_option("--input", records_in, "Labeled corpus JSONL")->required();
  records_cmd->add_option("--output", records_out, "Output JSONL ('-' for stdout)");

  std::string split_in, split_train, split_val;
  double split_fraction = 0.01;
  std::uint64_t split_seed = 42;
  auto* split_cmd = app.add_subcommand("split", "Deterministic train/validation split");
  split_cmd->add_option("--input", split_in, "Labeled corpus JSONL")->required();
  split_cmd->add_option("--train", split_train, "Training output JSONL")->required();
  split_cmd->add_option("--val", split_val, "Validation output JSONL")->required();
  split_cmd->add_option("--fraction", split_fraction, "Validation fraction")->check(CLI::Range(0.0, 0.999999));
  split_cmd->add_option("--seed", split_seed, "Shuffle seed");

  std::string base_model, config_out = "-";
  auto* config_cmd = app.add_subcommand("emit-config", "Write the QLoRA fine-tuning config");
  config_cmd->add_option("--base-model", base_model, "Base model id")->required();
  config_cmd->add_option("--output", config_out, "Output file ('-' for stdout)");

  bool schema_extension = false;
  auto* schema_cmd = app.add_subcommand("schema", "Print entity types and legal relation pairs as JSON");
  schema_cmd->add_flag("--allow-host-deaths", schema_extension, "Include the extension pair");

  std::string render_template, render_input;
  bool render_digest = false;
  auto* render_cmd = app.add_subcommand("render", "Print a prompt template, optionally filled");
  render_cmd->add_option("--template", render_template, "synthesis, annotation or inference")->required();
  render_cmd->add_option("--input", render_input, "Article file");
  render_cmd->add_flag("--digest", render_digest, "Print the template's SHA-256 instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidationError;
  }

  try {
    if (*extract_cmd) return run_extract(extract);
    if (*serve_cmd) return run_serve(serve);
    if (*eval_cmd) return run_eval(eval);
    if (*records_cmd) return run_gen_records(records_in, records_out);
    if (*split_cmd) return run_split(split_in, split_train, split_val, split_fraction, split_seed);
    if (*config_cmd) {
      write_output(config_out, rena::emit_finetune_config(base_model));
      return kOk;
    }
    if (*schema_cmd) {
      std::cout << rena::default_schema({.host_deaths_extension = schema_extension}).to_json().dump(2) << '\n';
      return kOk;
    }
    if (*render_cmd) {
      if (render_digest) {
        std::cout << rena::template_digest(render_template) << '\n';
        return kOk;
      }
      std::optional<std::string> article;
      if (!render_input.empty()) article = read_input(render_input);
      auto prompt = rena::render(render_template, article ? std::optional<std::string_view>(*article) : std::nullopt);
      if (prompt.system) std::cout << "[system]\n" << *prompt.system << "\n[user]\n";
      std::cout << prompt.user << '\n';
      return kOk;
    }
  } catch (const rena::UnknownModel& e) {
    std::cerr << "rena: " << e.what() << '\n';
    return kValidationError;
  } catch (const rena::InvalidGenerationRequest& e) {
    std::cerr << "rena: " << e.what() << '\n';
    return kValidationError;
  } catch (const rena::InferenceError& e) {
    std::cerr << "rena: " << e.what() << '\n';
    return kBackendError;
  } catch (const std::exception& e) {
    std::cerr << "rena: " << e.what() << '\n';
    return kValidationError;
  }
  return kValidationError;
}
