#pragma once

// Turns a model completion made of numbered triple lines, e.g.
//
//   1) "infectious disease": "H5N1", "relation": "located at", "location": "Laos"
//
// into typed triples plus per-line diagnostics. Nothing here throws on bad
// model text; every failure is reported in the ParseReport.

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rena/schema.hpp"
#include "rena/text.hpp"

namespace rena {

struct RawModelOutput {
  std::string text;
  std::string model_id;
};

enum class LineErrorKind {
  malformed_line,
  unknown_entity_key,
  unknown_relation,
  schema_violation,
  // Strict mode only.
  reversed_direction,
  duplicate,
};

constexpr std::string_view reason_code(LineErrorKind k) {
  switch (k) {
    case LineErrorKind::malformed_line: return "malformed_line";
    case LineErrorKind::unknown_entity_key: return "unknown_entity_key";
    case LineErrorKind::unknown_relation: return "unknown_relation";
    case LineErrorKind::schema_violation: return "schema_violation";
    case LineErrorKind::reversed_direction: return "reversed_direction";
    case LineErrorKind::duplicate: return "duplicate";
  }
  return "";
}

inline std::optional<LineErrorKind> reason_from_code(std::string_view code) {
  for (auto k : {LineErrorKind::malformed_line, LineErrorKind::unknown_entity_key,
                 LineErrorKind::unknown_relation, LineErrorKind::schema_violation,
                 LineErrorKind::reversed_direction, LineErrorKind::duplicate}) {
    if (reason_code(k) == code) return k;
  }
  return std::nullopt;
}

struct LineError {
  LineErrorKind kind{};
  std::string detail;
};

struct FillerLine {};

struct ParsedLine {
  // Always in the schema's declared direction.
  RelationTriple triple;
  bool reversed = false;
};

using LineOutcome = std::variant<FillerLine, ParsedLine, LineError>;

struct Rejection {
  std::size_t line = 0;  // 1-based
  std::string raw_line;
  LineErrorKind reason{};
  std::string detail;

  friend bool operator==(const Rejection&, const Rejection&) = default;
};

struct Warning {
  std::size_t line = 0;  // 1-based
  std::string note;

  friend bool operator==(const Warning&, const Warning&) = default;
};

struct ParseReport {
  std::vector<RelationTriple> triples;
  std::vector<Rejection> rejected;
  std::vector<Warning> warnings;
  // Not serialized; kept so callers can check line accounting.
  std::size_t filler_lines = 0;
  std::size_t line_count = 0;
};

struct ParseOptions {
  // Reversed or duplicate triples become rejections instead of warnings.
  bool strict = false;
};

namespace detail {

inline bool is_ascii_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

inline std::size_t skip_spaces(std::string_view s, std::size_t i) {
  while (i < s.size() && is_ascii_space(s[i])) ++i;
  return i;
}

// Strips "12)" or "12." plus following spaces. Returns true if an index was found.
inline bool strip_index(std::string_view& s) {
  std::size_t i = 0;
  while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
  if (i == 0 || i >= s.size() || (s[i] != ')' && s[i] != '.')) return false;
  s.remove_prefix(skip_spaces(s, i + 1));
  return true;
}

// At i: `"key"<ws>:`. Returns position after the colon, or npos.
inline std::size_t match_quoted_key(std::string_view s, std::size_t i) {
  if (i >= s.size() || s[i] != '"') return std::string_view::npos;
  auto close = s.find('"', i + 1);
  if (close == std::string_view::npos) return std::string_view::npos;
  auto j = skip_spaces(s, close + 1);
  if (j >= s.size() || s[j] != ':') return std::string_view::npos;
  return j + 1;
}

struct RawPair {
  std::string key;
  std::string value;
};

// Parses `"k": "v", "k": "v", ...`. A value ends at the first quote that is
// followed by end of input (optionally after commas) or by `, "key":`, so
// values may contain commas and stray quotes.
inline std::optional<std::vector<RawPair>> split_pairs(std::string_view body, std::string& why) {
  std::vector<RawPair> pairs;
  std::size_t i = skip_spaces(body, 0);
  while (i < body.size()) {
    if (body[i] != '"') {
      why = "expected opening quote of a key";
      return std::nullopt;
    }
    auto key_close = body.find('"', i + 1);
    if (key_close == std::string_view::npos) {
      why = "unterminated key";
      return std::nullopt;
    }
    std::string key(body.substr(i + 1, key_close - i - 1));
    auto j = skip_spaces(body, key_close + 1);
    if (j >= body.size() || body[j] != ':') {
      why = "expected ':' after key \"" + key + "\"";
      return std::nullopt;
    }
    j = skip_spaces(body, j + 1);
    if (j >= body.size() || body[j] != '"') {
      why = "expected quoted value for key \"" + key + "\"";
      return std::nullopt;
    }
    const std::size_t vstart = j + 1;
    std::size_t next = std::string_view::npos;
    std::size_t vend = std::string_view::npos;
    for (auto q = body.find('"', vstart); q != std::string_view::npos; q = body.find('"', q + 1)) {
      auto k = skip_spaces(body, q + 1);
      if (k >= body.size()) {
        vend = q;
        next = body.size();
        break;
      }
      if (body[k] != ',') continue;
      k = skip_spaces(body, k + 1);
      while (k < body.size() && body[k] == ',') k = skip_spaces(body, k + 1);
      if (k >= body.size()) {
        vend = q;
        next = body.size();
        break;
      }
      if (match_quoted_key(body, k) != std::string_view::npos) {
        vend = q;
        next = k;
        break;
      }
    }
    if (vend == std::string_view::npos) {
      why = "unterminated value for key \"" + key + "\"";
      return std::nullopt;
    }
    pairs.push_back({std::move(key), std::string(body.substr(vstart, vend - vstart))});
    i = next;
  }
  return pairs;
}

inline std::string describe(const RelationTriple& t) {
  std::string s;
  s += canonical_name(t.subject.type);
  s += " \"" + t.subject.surface + "\" ";
  s += canonical_name(t.relation);
  s += " ";
  s += canonical_name(t.object.type);
  s += " \"" + t.object.surface + "\"";
  return s;
}

}  // namespace detail

/// Parses one completion line. Blank lines and prose are FillerLine; lines
/// that look like a triple (indexed and opening with a quote, or naming a
/// "relation" key) either parse or produce a LineError. Triples are checked
/// in symmetric mode and returned in the schema's declared direction.
inline LineOutcome parse_line(std::string_view line, const RelationSchema& schema) {
  const std::string unified = text::unify_quotes(line);
  const std::string trimmed = text::trim(unified);
  std::string_view body = trimmed;
  if (body.empty()) return FillerLine{};

  const bool indexed = detail::strip_index(body);
  const bool mentions_relation = body.find("\"relation\"") != std::string_view::npos;
  const bool opens_like_pairs = !body.empty() && (body.front() == '"' || body.front() == '{');
  if (!mentions_relation && !(opens_like_pairs && (indexed || body.find("\":") != std::string_view::npos))) {
    return FillerLine{};
  }

  while (!body.empty() && (body.back() == ',' || detail::is_ascii_space(body.back()))) body.remove_suffix(1);
  if (!body.empty() && body.front() == '{') {
    body.remove_prefix(1);
    if (!body.empty() && body.back() == '}') body.remove_suffix(1);
    while (!body.empty() && (body.back() == ',' || detail::is_ascii_space(body.back()))) body.remove_suffix(1);
  }

  std::string why;
  auto pairs = detail::split_pairs(body, why);
  if (!pairs) return LineError{LineErrorKind::malformed_line, why};
  if (pairs->size() != 3) {
    return LineError{LineErrorKind::malformed_line,
                     "expected 3 key/value pairs, found " + std::to_string(pairs->size())};
  }

  std::optional<std::size_t> relation_at;
  for (std::size_t i = 0; i < pairs->size(); ++i) {
    if (text::normalize_key((*pairs)[i].key) == "relation") {
      if (relation_at) return LineError{LineErrorKind::malformed_line, "more than one \"relation\" key"};
      relation_at = i;
    }
  }
  if (!relation_at) return LineError{LineErrorKind::malformed_line, "missing \"relation\" key"};

  std::vector<Entity> entities;
  for (std::size_t i = 0; i < pairs->size(); ++i) {
    if (i == *relation_at) continue;
    const auto& p = (*pairs)[i];
    auto type = find_entity_type(p.key);
    if (!type) return LineError{LineErrorKind::unknown_entity_key, p.key};
    auto surface = text::trim(p.value);
    if (surface.empty()) return LineError{LineErrorKind::malformed_line, "empty value for key \"" + p.key + "\""};
    entities.push_back({*type, std::move(surface)});
  }

  const auto& rel_text = (*pairs)[*relation_at].value;
  auto relation = find_relation(rel_text);
  if (!relation) return LineError{LineErrorKind::unknown_relation, rel_text};

  RelationTriple triple{std::move(entities[0]), *relation, std::move(entities[1])};
  auto verdict = schema.validate(triple, ValidationMode::symmetric);
  if (!verdict.valid) return LineError{LineErrorKind::schema_violation, verdict.reason};
  if (verdict.reversed) return ParsedLine{reversed(triple), true};
  return ParsedLine{std::move(triple), false};
}

/// Splits on '\n' (a trailing '\r' is dropped). A final newline does not
/// start another line, so "" has zero lines.
inline std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < s.size()) {
    auto nl = s.find('\n', start);
    auto end = nl == std::string_view::npos ? s.size() : nl;
    auto l = s.substr(start, end - start);
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    lines.push_back(l);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return lines;
}

inline ParseReport parse_output(const RawModelOutput& raw, const RelationSchema& schema,
                                ParseOptions options = {}) {
  ParseReport report;
  std::map<RelationTriple, std::size_t> first_seen;
  const auto lines = split_lines(raw.text);
  report.line_count = lines.size();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t lineno = i + 1;
    auto outcome = parse_line(lines[i], schema);
    if (std::holds_alternative<FillerLine>(outcome)) {
      ++report.filler_lines;
      continue;
    }
    if (auto* err = std::get_if<LineError>(&outcome)) {
      report.rejected.push_back({lineno, std::string(lines[i]), err->kind, std::move(err->detail)});
      continue;
    }
    auto& parsed = std::get<ParsedLine>(outcome);
    if (parsed.reversed) {
      std::string note = "subject and object reversed to match declared direction: " + detail::describe(parsed.triple);
      if (options.strict) {
        report.rejected.push_back({lineno, std::string(lines[i]), LineErrorKind::reversed_direction, std::move(note)});
        continue;
      }
      report.warnings.push_back({lineno, std::move(note)});
    }
    auto [it, inserted] = first_seen.emplace(parsed.triple, lineno);
    if (!inserted) {
      std::string note = "duplicate of line " + std::to_string(it->second);
      if (options.strict) {
        report.rejected.push_back({lineno, std::string(lines[i]), LineErrorKind::duplicate, std::move(note)});
        continue;
      }
      report.warnings.push_back({lineno, std::move(note)});
    }
    report.triples.push_back(std::move(parsed.triple));
  }
  return report;
}

inline nlohmann::ordered_json report_to_json(const ParseReport& report) {
  nlohmann::ordered_json j;
  auto& rels = j["relations"] = nlohmann::ordered_json::array();
  for (const auto& t : report.triples) rels.push_back(triple_to_json(t));
  auto& rej = j["rejected"] = nlohmann::ordered_json::array();
  for (const auto& r : report.rejected) {
    nlohmann::ordered_json e;
    e["line"] = r.line;
    e["raw"] = r.raw_line;
    e["reason"] = reason_code(r.reason);
    e["detail"] = r.detail;
    rej.push_back(std::move(e));
  }
  auto& warn = j["warnings"] = nlohmann::ordered_json::array();
  for (const auto& w : report.warnings) {
    nlohmann::ordered_json e;
    e["line"] = w.line;
    e["note"] = w.note;
    warn.push_back(std::move(e));
  }
  return j;
}

/// Inverse of report_to_json. Throws std::invalid_argument (or a json
/// exception) on a document of the wrong shape.
template <class Json>
ParseReport report_from_json(const Json& j) {
  if (!j.is_object()) throw std::invalid_argument("parse report must be a JSON object");
  ParseReport report;
  for (const auto& t : j.at("relations")) report.triples.push_back(triple_from_json(t));
  if (j.contains("rejected")) {
    for (const auto& r : j.at("rejected")) {
      auto reason = reason_from_code(r.at("reason").template get<std::string>());
      if (!reason) throw std::invalid_argument("unknown rejection reason");
      report.rejected.push_back({r.at("line").template get<std::size_t>(), r.at("raw").template get<std::string>(),
                                 *reason, r.value("detail", std::string{})});
    }
  }
  if (j.contains("warnings")) {
    for (const auto& w : j.at("warnings")) {
      report.warnings.push_back({w.at("line").template get<std::size_t>(), w.at("note").template get<std::string>()});
    }
  }
  return report;
}

/// Writes triples back in the numbered line grammar, one per line, 1-based.
inline std::string format_triple_line(std::size_t index, const RelationTriple& t) {
  std::string line = std::to_string(index) + ") \"";
  line += surface_key(t.subject.type);
  line += "\": \"" + t.subject.surface + "\", \"relation\": \"";
  line += surface_form(t.relation);
  line += "\", \"";
  line += surface_key(t.object.type);
  line += "\": \"" + t.object.surface + "\"";
  return line;
}

}  // namespace rena
