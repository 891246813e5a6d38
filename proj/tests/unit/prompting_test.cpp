#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "rena/prompting.hpp"
#include "rena/schema.hpp"
#include "test_support.hpp"

using namespace rena;

namespace {

// Pinned from `cat <files> | sha256sum` over templates/.
constexpr std::string_view kSynthesisDigest = "a7e8aeac9a9be691d3f763469e4278bede6294f3e7619e1fded41f362bfe9da9";
constexpr std::string_view kAnnotationDigest = "1951e5f5fafa7d6fe80814e6359961b08919e86977541896d142c3202505c60a";
constexpr std::string_view kInferenceDigest = "dce6d323ce5a411abd7ea88646d9a72c7935ef350682069e4eb8676a6e156da4";

const char* const kRelationLines[] = {
    R"(- "located at" is between: disease - location, symptom/syndrome - location, case number - location)",
    R"(- "occurred on" is between: disease - date, symptom/syndrome - date, case number - date)",
    R"(- "are symptoms of" is between: disease - symptom/syndrome)",
    R"(- "deaths of" is between: disease - death numbers)",
    R"(- "cases of" is between: disease - case numbers, symptom/syndrome - case numbers)",
    R"(- "caused by" is between: disease - pathogen)",
    R"(- "affected by" is between: people - disease)",
};

std::size_t count(const std::string& hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("synthesis prompt", "[prompting]") {
  auto p = render(TemplateId::synthesis, std::nullopt);
  REQUIRE(p.system);
  CHECK(*p.system == "You are an AI content creator who helps to write news about epidemic around the world.");
  CHECK(p.user.rfind("I have an example articles:\nExample:\nTitle: Ebola Virus Epidemic", 0) == 0);
  CHECK(p.user.size() > 0);
  CHECK(p.user.substr(p.user.size() - 38) == "Please help me to create another one. ");
  CHECK_THROWS_AS(render(TemplateId::synthesis, "article"), UnexpectedArticle);
}

TEST_CASE("annotation prompt", "[prompting]") {
  auto p = render(TemplateId::annotation, "X");
  REQUIRE(p.system);
  CHECK(*p.system == "You are a smart and intelligent Relation Extraction (RE) system for diseases information.");
  CHECK(p.user.find(R"(- "caused by" is between: disease - pathogen)") != std::string::npos);
  CHECK(p.user.ends_with("Article: X\nOutput:"));
  CHECK(p.user.find("\"\"\"") == std::string::npos);
  CHECK(p.user.find("{content}") == std::string::npos);
  CHECK_THROWS_AS(render(TemplateId::annotation, std::nullopt), MissingArticle);
}

TEST_CASE("annotation prompt carries the one-shot example verbatim", "[prompting]") {
  auto p = render(TemplateId::annotation, "X");
  CHECK(p.user.find(testing::fixture("one_shot_output.txt")) != std::string::npos);
  CHECK(p.user.find("Article: Laos reports two H5N1 avian influenza poultry outbreaks") != std::string::npos);
}

TEST_CASE("inference prompt", "[prompting]") {
  auto p = render(TemplateId::inference, "");
  CHECK_FALSE(p.system);
  CHECK(p.user.ends_with("### Response:"));
  CHECK(count(p.user, "### Instruction:") == 1);
  CHECK(count(p.user, "### Response:") == 1);
  CHECK(p.user.find("### Instruction:") < p.user.find("### Response:"));
  CHECK_THROWS_AS(render(TemplateId::inference, std::nullopt), MissingArticle);
}

TEST_CASE("inference prompt filled with the India article matches the reference prompt", "[prompting]") {
  auto article = testing::fixture("india_article.txt");
  auto expected = testing::chomp(testing::fixture("india_inference_prompt.txt"));
  CHECK(render(TemplateId::inference, article).user == expected);
}

TEST_CASE("both extraction prompts list the seven relations", "[prompting]") {
  for (auto id : {TemplateId::annotation, TemplateId::inference}) {
    auto p = render(id, "X");
    for (auto* line : kRelationLines) {
      INFO(template_name(id) << ": " << line);
      CHECK(p.user.find(line) != std::string::npos);
    }
  }
}

TEST_CASE("relation list surfaces match the schema", "[prompting][schema]") {
  const auto user = render(TemplateId::annotation, "X").user;
  std::regex re(R"x(^- "([a-z ]+)" is between:)x");
  std::vector<std::string> listed;
  std::istringstream lines(user);
  std::smatch m;
  for (std::string line; std::getline(lines, line);) {
    if (std::regex_search(line, m, re)) listed.push_back(m[1]);
  }
  REQUIRE(listed.size() == kRelationTypes.size());
  for (std::size_t i = 0; i < listed.size(); ++i) CHECK(listed[i] == surface_form(kRelationTypes[i]));
}

TEST_CASE("rendering is deterministic and substitutes only the placeholder", "[prompting]") {
  CHECK(render(TemplateId::inference, "A {content} B") == render(TemplateId::inference, "A {content} B"));
  auto p = render(TemplateId::inference, "A {content} B");
  CHECK(p.user.find("Article: A {content} B\n### Response:") != std::string::npos);
}

TEST_CASE("template digests are pinned", "[prompting][golden]") {
  CHECK(template_digest(TemplateId::synthesis) == kSynthesisDigest);
  CHECK(template_digest(TemplateId::annotation) == kAnnotationDigest);
  CHECK(template_digest(TemplateId::inference) == kInferenceDigest);
  CHECK(template_digest("annotation") != template_digest("inference"));
  CHECK(template_digest("synthesis") == template_digest("synthesis"));
  CHECK_THROWS_AS(template_digest("summary"), UnknownTemplate);
}

TEST_CASE("on-disk templates match the compiled-in copy", "[prompting]") {
  auto disk = TemplateStore::load_directory(RENA_TEMPLATE_DIR);
  for (auto id : kTemplateIds) {
    CHECK(disk.digest(id) == template_digest(id));
    if (id != TemplateId::synthesis) CHECK(disk.render(id, "x") == render(id, "x"));
  }
}

TEST_CASE("CRLF template files digest like LF files", "[prompting]") {
  auto dir = std::filesystem::temp_directory_path() / "rena_crlf_templates";
  std::filesystem::create_directories(dir);
  for (auto id : kTemplateIds) {
    for (auto name : template_files(id)) {
      auto content = testing::read_file(std::string(RENA_TEMPLATE_DIR) + "/" + std::string(name));
      std::string crlf;
      for (char c : content) {
        if (c == '\n') crlf += '\r';
        crlf += c;
      }
      std::ofstream(dir / std::string(name), std::ios::binary) << crlf;
    }
  }
  auto store = TemplateStore::load_directory(dir);
  CHECK(store.digest(TemplateId::annotation) == kAnnotationDigest);
  std::filesystem::remove_all(dir);
}

TEST_CASE("unknown template names", "[prompting]") {
  CHECK_THROWS_AS(template_id_from_name("summary"), UnknownTemplate);
  CHECK_THROWS_AS(render("summary", "x"), UnknownTemplate);
  CHECK(template_id_from_name("inference") == TemplateId::inference);
}

TEST_CASE("sha256_hex matches a known vector", "[prompting]") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
