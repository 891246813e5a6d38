#pragma once

// NER and RE scoring. Entities are compared as sets of (type, normalized
// surface); relations are scored only where both gold entities were
// recognized, direction-insensitively, and micro-averaged over documents.

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rena/output_parser.hpp"
#include "rena/schema.hpp"
#include "rena/text.hpp"

namespace rena {

/// casefold, trim, collapse whitespace, then strip leading/trailing
/// . , ; : ! ? and quote characters.
inline std::string normalize_surface(std::string_view s) {
  auto is_strip = [](char32_t c) {
    switch (c) {
      case U'.': case U',': case U';': case U':': case U'!': case U'?':
      case U'"': case U'\'': case 0x201C: case 0x201D: case 0x2018: case 0x2019:
        return true;
      default:
        return false;
    }
  };
  auto cps = text::collapse_whitespace(text::decode_utf8(s));
  std::size_t b = 0;
  std::size_t e = cps.size();
  while (b < e && (is_strip(cps[b]) || text::is_space(cps[b]))) ++b;
  while (e > b && (is_strip(cps[e - 1]) || text::is_space(cps[e - 1]))) --e;
  std::u32string out = cps.substr(b, e - b);
  for (auto& c : out) c = text::fold(c);
  return text::encode_utf8(out);
}

struct EntityKey {
  EntityType type{};
  std::string surface;  // normalized

  friend bool operator==(const EntityKey&, const EntityKey&) = default;
  friend auto operator<=>(const EntityKey&, const EntityKey&) = default;
};

inline EntityKey key_of(const Entity& e) { return {e.type, normalize_surface(e.surface)}; }

// Relation between two entities irrespective of direction; lo <= hi.
struct TripleKey {
  EntityKey lo;
  RelationType relation{};
  EntityKey hi;

  friend bool operator==(const TripleKey&, const TripleKey&) = default;
  friend auto operator<=>(const TripleKey&, const TripleKey&) = default;
};

inline TripleKey key_of(const RelationTriple& t) {
  auto a = key_of(t.subject);
  auto b = key_of(t.object);
  if (b < a) std::swap(a, b);
  return {std::move(a), t.relation, std::move(b)};
}

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  static PRF from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn);
};

inline double f1(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

inline PRF PRF::from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  PRF out;
  out.tp = tp;
  out.fp = fp;
  out.fn = fn;
  out.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  out.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  out.f1 = rena::f1(out.precision, out.recall);
  return out;
}

struct EntityMatch {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::set<EntityKey> matched;
};

inline std::set<EntityKey> entity_set(const std::vector<RelationTriple>& triples) {
  std::set<EntityKey> out;
  for (const auto& t : triples) {
    out.insert(key_of(t.subject));
    out.insert(key_of(t.object));
  }
  return out;
}

inline EntityMatch match_entities(const std::set<EntityKey>& gold, const std::set<EntityKey>& pred) {
  EntityMatch m;
  for (const auto& p : pred) {
    if (gold.count(p)) m.matched.insert(p);
  }
  m.tp = m.matched.size();
  m.fp = pred.size() - m.tp;
  m.fn = gold.size() - m.tp;
  return m;
}

/// Gold triples are in scope iff both entities were recognized; predicted
/// triples count only when both of their entities were recognized.
inline PRF score_re(const std::vector<RelationTriple>& gold_triples, const std::vector<RelationTriple>& pred_triples,
                    const EntityMatch& entity_matching) {
  const auto& rec = entity_matching.matched;
  auto recognized = [&](const TripleKey& k) { return rec.count(k.lo) && rec.count(k.hi); };

  std::set<TripleKey> scope;
  for (const auto& t : gold_triples) {
    auto k = key_of(t);
    if (recognized(k)) scope.insert(std::move(k));
  }
  std::set<TripleKey> pred;
  for (const auto& t : pred_triples) {
    auto k = key_of(t);
    if (recognized(k)) pred.insert(std::move(k));
  }
  std::uint64_t tp = 0;
  for (const auto& k : pred) tp += scope.count(k);
  return PRF::from_counts(tp, pred.size() - tp, scope.size() - tp);
}

struct GoldDocument {
  std::string doc_id;
  std::string article;
  std::vector<RelationTriple> gold_triples;
};

struct DocScore {
  std::string doc_id;
  PRF ner;
  PRF re;
};

struct EvalReport {
  PRF ner;
  PRF re;
  std::vector<DocScore> per_doc;
};

class DuplicateDocId : public std::runtime_error {
 public:
  explicit DuplicateDocId(const std::string& id) : std::runtime_error("duplicate doc_id: " + id) {}
};

inline EvalReport evaluate_corpus(const std::vector<std::pair<GoldDocument, ParseReport>>& docs) {
  EvalReport report;
  std::set<std::string> ids;
  std::uint64_t ner_tp = 0, ner_fp = 0, ner_fn = 0;
  std::uint64_t re_tp = 0, re_fp = 0, re_fn = 0;
  for (const auto& [gold, pred] : docs) {
    if (!ids.insert(gold.doc_id).second) throw DuplicateDocId(gold.doc_id);
    auto m = match_entities(entity_set(gold.gold_triples), entity_set(pred.triples));
    auto ner = PRF::from_counts(m.tp, m.fp, m.fn);
    auto re = score_re(gold.gold_triples, pred.triples, m);
    ner_tp += ner.tp;
    ner_fp += ner.fp;
    ner_fn += ner.fn;
    re_tp += re.tp;
    re_fp += re.fp;
    re_fn += re.fn;
    report.per_doc.push_back({gold.doc_id, ner, re});
  }
  report.ner = PRF::from_counts(ner_tp, ner_fp, ner_fn);
  report.re = PRF::from_counts(re_tp, re_fp, re_fn);
  return report;
}

inline nlohmann::ordered_json prf_to_json(const PRF& p) {
  nlohmann::ordered_json j;
  j["precision"] = p.precision;
  j["recall"] = p.recall;
  j["f1"] = p.f1;
  j["tp"] = p.tp;
  j["fp"] = p.fp;
  j["fn"] = p.fn;
  return j;
}

inline nlohmann::ordered_json eval_report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["ner"] = prf_to_json(r.ner);
  j["re"] = prf_to_json(r.re);
  auto& docs = j["per_doc"] = nlohmann::ordered_json::array();
  for (const auto& d : r.per_doc) {
    nlohmann::ordered_json e;
    e["doc_id"] = d.doc_id;
    e["ner"] = prf_to_json(d.ner);
    e["re"] = prf_to_json(d.re);
    docs.push_back(std::move(e));
  }
  return j;
}

/// Plain-text table with the columns Model, Eval, Precision, Recall, F1.
inline std::string format_eval_table(std::string_view model, const EvalReport& r) {
  const std::size_t w = std::max<std::size_t>(model.size(), 5);
  auto row = [&](std::string_view m, std::string_view eval, std::string_view p, std::string_view rc,
                 std::string_view f) {
    std::string line(m);
    line.append(w - m.size() + 2, ' ');
    line += eval;
    line.append(6 - eval.size(), ' ');
    line += std::string(9 - p.size(), ' ') + std::string(p);
    line += std::string(9 - rc.size(), ' ') + std::string(rc);
    line += std::string(7 - f.size(), ' ') + std::string(f);
    return line + "\n";
  };
  auto fmt = [](double v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  std::string out = row("Model", "Eval", "Precision", "Recall", "F1");
  out += row(model, "NER", fmt(r.ner.precision), fmt(r.ner.recall), fmt(r.ner.f1));
  out += row(model, "RE", fmt(r.re.precision), fmt(r.re.recall), fmt(r.re.f1));
  return out;
}

/// {"doc_id", "article", "triples":[...]} per line. Duplicate gold triples
/// are kept here and collapsed by the scorer.
inline GoldDocument gold_from_json(const nlohmann::json& j) {
  GoldDocument d;
  d.doc_id = j.at("doc_id").get<std::string>();
  d.article = j.value("article", std::string{});
  for (const auto& t : j.at("triples")) d.gold_triples.push_back(triple_from_json(t));
  return d;
}

inline nlohmann::ordered_json gold_to_json(const GoldDocument& d) {
  nlohmann::ordered_json j;
  j["doc_id"] = d.doc_id;
  j["article"] = d.article;
  auto& ts = j["triples"] = nlohmann::ordered_json::array();
  for (const auto& t : d.gold_triples) ts.push_back(triple_to_json(t));
  return j;
}

inline std::vector<GoldDocument> read_gold_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open gold corpus " + path);
  std::vector<GoldDocument> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      docs.push_back(gold_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return docs;
}

}  // namespace rena
