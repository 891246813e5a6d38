#include <catch2/catch_amalgamated.hpp>

#include <deque>

#include "rena/http_transport.hpp"
#include "rena/inference_client.hpp"
#include "test_support.hpp"

using namespace rena;
using namespace std::chrono_literals;

namespace {

// Replays scripted outcomes and records every call.
struct FakeTransport final : Transport {
  struct Call {
    std::string base_url, path, body;
  };
  std::deque<std::variant<HttpReply, TransportFailure>> script;
  std::vector<Call> calls;
  bool reachable = true;

  HttpReply post_json(const std::string& base_url, const std::string& path, const std::string& body,
                      std::chrono::milliseconds) override {
    calls.push_back({base_url, path, body});
    if (script.empty()) throw TransportError(TransportFailure::connection, "refused");
    auto next = script.front();
    script.pop_front();
    if (auto* f = std::get_if<TransportFailure>(&next)) throw TransportError(*f, "scripted failure");
    return std::get<HttpReply>(next);
  }
  bool probe(const std::string&, std::chrono::milliseconds) override { return reachable; }
};

ModelRegistry one_model(ModelKind kind, std::string endpoint = "http://backend:9000") {
  return ModelRegistry({{"m", "M", std::move(endpoint), kind, "org/M", TemplateId::inference}});
}

GenerationRequest request(std::string model = "m") {
  GenerationRequest r;
  r.model = std::move(model);
  r.prompt = {std::nullopt, "### Instruction:\nhi\n### Response:"};
  r.max_tokens = 64;
  return r;
}

std::string completion_body(const std::string& text) {
  return nlohmann::json{{"choices", {{{"text", text}}}}}.dump();
}

}  // namespace

TEST_CASE("default registry lists the two extraction models", "[inference]") {
  auto reg = default_registry();
  REQUIRE(reg.size() == 2);
  CHECK(reg.list()[0].id == "openorca-platypus2-13b");
  CHECK(reg.list()[0].display_name == "OpenOrca-Platypus2-13B");
  CHECK(reg.list()[1].id == "mythical-destroyer-v2-l2-13b");
  CHECK(reg.list()[1].display_name == "Mythical-Destroyer-V2-L2-13B");
  CHECK(list_models(reg).size() == 2);
}

TEST_CASE("registry rejects duplicates and resolves ids", "[inference]") {
  auto reg = one_model(ModelKind::chat);
  CHECK_THROWS_AS(reg.add({"m", "again", "stub:", ModelKind::chat, "", TemplateId::inference}), std::invalid_argument);
  CHECK_THROWS_AS(reg.add({"", "empty", "stub:", ModelKind::chat, "", TemplateId::inference}), std::invalid_argument);
  CHECK_THROWS_AS(reg.at("gpt-9"), UnknownModel);
  CHECK(reg.at("m").wire_model() == "org/M");
}

TEST_CASE("completion payload", "[inference]") {
  auto spec = one_model(ModelKind::completion).at("m");
  auto req = request();
  req.prompt.system = "SYS";
  auto j = nlohmann::json::parse(InferenceClient::build_payload(spec, req));
  CHECK(j["model"] == "org/M");
  CHECK(j["prompt"] == "SYS\n\n### Instruction:\nhi\n### Response:");
  CHECK(j["max_tokens"] == 64);
  CHECK(j["temperature"] == 0.0);
  CHECK(j["stream"] == false);
  CHECK(InferenceClient::api_path(ModelKind::completion) == "/v1/completions");
}

TEST_CASE("chat payload", "[inference]") {
  auto spec = one_model(ModelKind::chat).at("m");
  auto req = request();
  req.prompt.system = "SYS";
  auto j = nlohmann::json::parse(InferenceClient::build_payload(spec, req));
  REQUIRE(j["messages"].size() == 2);
  CHECK(j["messages"][0]["role"] == "system");
  CHECK(j["messages"][0]["content"] == "SYS");
  CHECK(j["messages"][1]["role"] == "user");
  CHECK(InferenceClient::api_path(ModelKind::chat) == "/v1/chat/completions");
}

TEST_CASE("generate returns backend text unmodified", "[inference]") {
  auto fake = std::make_shared<FakeTransport>();
  fake->script.push_back(HttpReply{200, completion_body("  1) raw\n\n")});
  InferenceClient client(one_model(ModelKind::completion), {}, fake, [](auto) {});
  auto out = client.generate(request());
  CHECK(out.raw.text == "  1) raw\n\n");
  CHECK(out.raw.model_id == "m");
  REQUIRE(fake->calls.size() == 1);
  CHECK(fake->calls[0].path == "/v1/completions");
  CHECK(fake->calls[0].base_url == "http://backend:9000");
}

TEST_CASE("chat replies are read from message content", "[inference]") {
  auto fake = std::make_shared<FakeTransport>();
  fake->script.push_back(HttpReply{200, R"({"choices":[{"message":{"role":"assistant","content":"ok"}}]})"});
  InferenceClient client(one_model(ModelKind::chat), {}, fake, [](auto) {});
  CHECK(client.generate(request()).raw.text == "ok");
}

TEST_CASE("unreachable backend is retried R times with backoff", "[inference]") {
  auto fake = std::make_shared<FakeTransport>();
  std::vector<std::chrono::milliseconds> sleeps;
  ClientOptions opts;
  opts.retries = 2;
  InferenceClient client(one_model(ModelKind::completion), opts, fake, [&](auto d) { sleeps.push_back(d); });
  try {
    client.generate(request());
    FAIL("expected BackendUnreachable");
  } catch (const BackendUnreachable& e) {
    CHECK(e.attempts() == 3);
  }
  REQUIRE(fake->calls.size() == 3);
  CHECK(fake->calls[0].body == fake->calls[1].body);
  CHECK(fake->calls[1].body == fake->calls[2].body);
  CHECK(sleeps == std::vector<std::chrono::milliseconds>{250ms, 500ms});
}

TEST_CASE("a transient failure then success", "[inference]") {
  auto fake = std::make_shared<FakeTransport>();
  fake->script.push_back(TransportFailure::connection);
  fake->script.push_back(HttpReply{200, completion_body("done")});
  InferenceClient client(one_model(ModelKind::completion), {}, fake, [](auto) {});
  CHECK(client.generate(request()).raw.text == "done");
  CHECK(fake->calls.size() == 2);
}

TEST_CASE("timeouts surface as BackendTimeout", "[inference]") {
  auto fake = std::make_shared<FakeTransport>();
  for (int i = 0; i < 3; ++i) fake->script.push_back(TransportFailure::timeout);
  InferenceClient client(one_model(ModelKind::completion), {}, fake, [](auto) {});
  CHECK_THROWS_AS(client.generate(request()), BackendTimeout);
  CHECK(fake->calls.size() == 3);
}

TEST_CASE("HTTP errors are not retried", "[inference]") {
  auto fake = std::make_shared<FakeTransport>();
  fake->script.push_back(HttpReply{400, R"({"error":"bad"})"});
  InferenceClient client(one_model(ModelKind::completion), {}, fake, [](auto) {});
  try {
    client.generate(request());
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(e.status() == 400);
    CHECK(e.body() == R"({"error":"bad"})");
  }
  CHECK(fake->calls.size() == 1);
}

TEST_CASE("malformed success body is a backend error", "[inference]") {
  auto fake = std::make_shared<FakeTransport>();
  fake->script.push_back(HttpReply{200, "not json"});
  InferenceClient client(one_model(ModelKind::completion), {}, fake, [](auto) {});
  CHECK_THROWS_AS(client.generate(request()), BackendError);
}

TEST_CASE("invalid requests fail before any network call", "[inference]") {
  auto fake = std::make_shared<FakeTransport>();
  InferenceClient client(one_model(ModelKind::completion), {}, fake, [](auto) {});
  auto req = request();
  req.max_tokens = 0;
  CHECK_THROWS_AS(client.generate(req), InvalidGenerationRequest);
  req.max_tokens = 10;
  req.temperature = -1;
  CHECK_THROWS_AS(client.generate(req), InvalidGenerationRequest);
  CHECK_THROWS_AS(client.generate(request("gpt-9")), UnknownModel);
  CHECK(fake->calls.empty());
}

TEST_CASE("stub backend", "[inference]") {
  InferenceClient client(one_model(ModelKind::completion, "stub:"), {}, nullptr);
  auto req = request();
  req.prompt.user = "Article: avian influenza in Laos";
  CHECK(client.generate(req).raw.text == testing::chomp(testing::fixture("one_shot_output.txt")));
  req.prompt.user = "Article: nothing to see";
  CHECK(client.generate(req).raw.text == "No relations found.");
  CHECK(client.probe(client.registry().at("m")));
}

TEST_CASE("probe delegates to the transport", "[inference]") {
  auto fake = std::make_shared<FakeTransport>();
  fake->reachable = false;
  InferenceClient client(one_model(ModelKind::completion), {}, fake);
  CHECK_FALSE(client.probe(client.registry().at("m")));
}

TEST_CASE("base URL splitting", "[inference][http]") {
  CHECK(split_base_url("http://127.0.0.1:8001") == std::pair<std::string, std::string>{"http://127.0.0.1:8001", ""});
  CHECK(split_base_url("http://host:80/api/") == std::pair<std::string, std::string>{"http://host:80", "/api"});
}

TEST_CASE("HTTP transport reports refused connections", "[inference][http]") {
  // Port 9 on loopback is the discard service, normally closed.
  auto client = InferenceClient(one_model(ModelKind::completion, "http://127.0.0.1:9"), {.timeout = 500ms, .retries = 0},
                                std::make_shared<HttplibTransport>());
  CHECK_THROWS_AS(client.generate(request()), BackendUnreachable);
  CHECK_FALSE(client.probe(client.registry().at("m")));
}
