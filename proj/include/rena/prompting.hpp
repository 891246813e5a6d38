#pragma once

// The three prompts: synthetic-article generation, one-shot annotation and
// fine-tuned-model inference. Canonical text lives in templates/*.txt and is
// compiled in; TemplateStore::load_directory reads an audited copy at runtime.

#include <array>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>

#include "rena/template_data.hpp"

namespace rena {

enum class TemplateId { synthesis, annotation, inference };

inline constexpr std::array<TemplateId, 3> kTemplateIds{TemplateId::synthesis, TemplateId::annotation,
                                                        TemplateId::inference};

inline constexpr std::string_view kArticlePlaceholder = "{content}";

constexpr std::string_view template_name(TemplateId id) {
  switch (id) {
    case TemplateId::synthesis: return "synthesis";
    case TemplateId::annotation: return "annotation";
    case TemplateId::inference: return "inference";
  }
  return "";
}

class PromptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownTemplate : public PromptError {
 public:
  explicit UnknownTemplate(std::string_view name) : PromptError("unknown template: " + std::string(name)) {}
};

class MissingArticle : public PromptError {
 public:
  explicit MissingArticle(TemplateId id)
      : PromptError("template '" + std::string(template_name(id)) + "' requires an article") {}
};

class UnexpectedArticle : public PromptError {
 public:
  explicit UnexpectedArticle(TemplateId id)
      : PromptError("template '" + std::string(template_name(id)) + "' takes no article") {}
};

inline TemplateId template_id_from_name(std::string_view name) {
  for (auto id : kTemplateIds) {
    if (template_name(id) == name) return id;
  }
  throw UnknownTemplate(name);
}

/// File names backing a template, system file first.
inline std::vector<std::string_view> template_files(TemplateId id) {
  switch (id) {
    case TemplateId::synthesis: return {"synthesis.system.txt", "synthesis.user.txt"};
    case TemplateId::annotation: return {"annotation.system.txt", "annotation.user.txt"};
    case TemplateId::inference: return {"inference.txt"};
  }
  return {};
}

struct PromptTemplate {
  TemplateId id{};
  std::optional<std::string> system_text;
  std::string user_template;
  // LF-normalized file bytes, in template_files() order; the digest input.
  std::vector<std::string> file_bytes;
};

struct RenderedPrompt {
  std::optional<std::string> system;
  std::string user;

  friend bool operator==(const RenderedPrompt&, const RenderedPrompt&) = default;
};

inline std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0x0F]);
  }
  return out;
}

namespace detail {

inline std::string normalize_newlines(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == '\r') {
      out.push_back('\n');
      if (i + 1 < in.size() && in[i + 1] == '\n') ++i;
    } else {
      out.push_back(in[i]);
    }
  }
  return out;
}

// Files end with one LF by convention; it is not part of the prompt.
inline std::string strip_final_newline(std::string s) {
  if (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

inline std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string_view::npos; p = hay.find(needle, p + needle.size())) ++n;
  return n;
}

inline PromptTemplate make_template(TemplateId id, std::vector<std::string> files) {
  PromptTemplate t;
  t.id = id;
  for (auto& f : files) f = normalize_newlines(f);
  t.file_bytes = files;
  if (files.size() == 2) {
    t.system_text = strip_final_newline(files[0]);
    t.user_template = strip_final_newline(files[1]);
  } else {
    t.user_template = strip_final_newline(files[0]);
  }
  const auto holes = count_occurrences(t.user_template, kArticlePlaceholder);
  const std::size_t want = id == TemplateId::synthesis ? 0 : 1;
  if (holes != want) {
    throw PromptError("template '" + std::string(template_name(id)) + "' must contain " + std::to_string(want) +
                      " article placeholder(s), found " + std::to_string(holes));
  }
  return t;
}

}  // namespace detail

class TemplateStore {
 public:
  /// Templates compiled in from templates/.
  static TemplateStore builtin() {
    TemplateStore store;
    for (auto id : kTemplateIds) {
      std::vector<std::string> files;
      for (auto name : template_files(id)) files.emplace_back(builtin_template_file(name));
      store.templates_[static_cast<std::size_t>(id)] = detail::make_template(id, std::move(files));
    }
    return store;
  }

  static TemplateStore load_directory(const std::filesystem::path& dir) {
    TemplateStore store;
    for (auto id : kTemplateIds) {
      std::vector<std::string> files;
      for (auto name : template_files(id)) {
        std::ifstream in(dir / std::string(name), std::ios::binary);
        if (!in) throw PromptError("cannot read template file " + (dir / std::string(name)).string());
        std::ostringstream ss;
        ss << in.rdbuf();
        files.push_back(ss.str());
      }
      store.templates_[static_cast<std::size_t>(id)] = detail::make_template(id, std::move(files));
    }
    return store;
  }

  const PromptTemplate& get(TemplateId id) const { return templates_[static_cast<std::size_t>(id)]; }

  RenderedPrompt render(TemplateId id, std::optional<std::string_view> article) const {
    const auto& t = get(id);
    if (id == TemplateId::synthesis) {
      if (article) throw UnexpectedArticle(id);
      return {t.system_text, t.user_template};
    }
    if (!article) throw MissingArticle(id);
    std::string user = t.user_template;
    const auto at = user.find(kArticlePlaceholder);
    user.replace(at, kArticlePlaceholder.size(), *article);
    return {t.system_text, std::move(user)};
  }

  std::string digest(TemplateId id) const {
    std::string all;
    for (const auto& f : get(id).file_bytes) all += f;
    return sha256_hex(all);
  }

 private:
  TemplateStore() = default;
  static std::string_view builtin_template_file(std::string_view name) {
    for (const auto& f : detail::kBuiltinTemplateFiles) {
      if (f.name == name) return f.content;
    }
    throw UnknownTemplate(name);
  }

  std::array<PromptTemplate, 3> templates_;
};

inline const TemplateStore& builtin_templates() {
  static const TemplateStore store = TemplateStore::builtin();
  return store;
}

inline RenderedPrompt render(TemplateId id, std::optional<std::string_view> article) {
  return builtin_templates().render(id, article);
}

inline RenderedPrompt render(std::string_view template_name, std::optional<std::string_view> article) {
  return render(template_id_from_name(template_name), article);
}

inline std::string template_digest(TemplateId id) { return builtin_templates().digest(id); }

inline std::string template_digest(std::string_view template_name) {
  return template_digest(template_id_from_name(template_name));
}

}  // namespace rena
