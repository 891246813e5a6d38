#pragma once

// Places extracted entities back onto the article as code-point spans and
// assigns each entity type a fixed color token.

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "rena/schema.hpp"
#include "rena/text.hpp"

namespace rena {

struct EntitySpan {
  std::size_t start = 0;  // code point, inclusive
  std::size_t end = 0;    // code point, exclusive
  Entity entity;

  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
};

inline constexpr std::array<std::string_view, 8> kColorPalette{
    "crimson", "darkorange", "goldenrod", "seagreen", "teal", "royalblue", "darkviolet", "deeppink",
};

using ColorMap = std::map<EntityType, std::string>;

struct AnnotatedDocument {
  std::string article;
  std::vector<EntitySpan> spans;  // sorted by start, non-overlapping
  std::vector<Entity> unlocated;
  ColorMap colors;
};

/// Palette slot is the type's position in canonical order.
inline ColorMap color_map(const std::set<EntityType>& types_present) {
  ColorMap out;
  for (auto t : types_present) out.emplace(t, std::string(kColorPalette[static_cast<std::size_t>(t)]));
  return out;
}

namespace detail {

// Folded, whitespace-collapsed code points used for matching.
inline std::u32string match_pattern(std::string_view surface) {
  auto cps = text::collapse_whitespace(text::decode_utf8(surface));
  for (auto& c : cps) c = text::fold(c);
  return cps;
}

// Length of the match of `pattern` at `start`, or 0. A space in the pattern
// matches any non-empty whitespace run.
inline std::size_t match_at(const std::u32string& folded, std::size_t start, const std::u32string& pattern) {
  std::size_t i = start;
  for (char32_t c : pattern) {
    if (c == U' ') {
      if (i >= folded.size() || !text::is_space(folded[i])) return 0;
      while (i < folded.size() && text::is_space(folded[i])) ++i;
    } else {
      if (i >= folded.size() || folded[i] != c) return 0;
      ++i;
    }
  }
  return i - start;
}

}  // namespace detail

/// Finds every case-insensitive occurrence of each distinct entity, then keeps
/// a non-overlapping subset greedily: longer surfaces first, then leftmost.
inline AnnotatedDocument locate_entities(std::string_view article, std::span<const Entity> entities) {
  AnnotatedDocument doc;
  doc.article = std::string(article);

  std::u32string folded = text::decode_utf8(article);
  for (auto& c : folded) c = text::fold(c);

  struct Distinct {
    Entity entity;
    std::u32string pattern;
  };
  std::vector<Distinct> distinct;
  std::set<std::pair<EntityType, std::u32string>> seen;
  std::set<EntityType> types;
  for (const auto& e : entities) {
    types.insert(e.type);
    auto pattern = detail::match_pattern(e.surface);
    if (seen.emplace(e.type, pattern).second) distinct.push_back({e, std::move(pattern)});
  }

  struct Candidate {
    std::size_t start;
    std::size_t end;
    std::size_t which;
  };
  std::vector<Candidate> candidates;
  for (std::size_t k = 0; k < distinct.size(); ++k) {
    const auto& pattern = distinct[k].pattern;
    if (pattern.empty()) continue;
    for (std::size_t s = 0; s < folded.size(); ++s) {
      if (auto len = detail::match_at(folded, s, pattern)) candidates.push_back({s, s + len, k});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
    const auto& pa = distinct[a.which];
    const auto& pb = distinct[b.which];
    return std::tuple(pb.pattern.size(), a.start, pa.entity.type, a.which) <
           std::tuple(pa.pattern.size(), b.start, pb.entity.type, b.which);
  });

  std::vector<bool> covered(folded.size(), false);
  std::vector<bool> located(distinct.size(), false);
  for (const auto& c : candidates) {
    if (std::any_of(covered.begin() + static_cast<std::ptrdiff_t>(c.start),
                    covered.begin() + static_cast<std::ptrdiff_t>(c.end), [](bool b) { return b; })) {
      continue;
    }
    std::fill(covered.begin() + static_cast<std::ptrdiff_t>(c.start),
              covered.begin() + static_cast<std::ptrdiff_t>(c.end), true);
    located[c.which] = true;
    doc.spans.push_back({c.start, c.end, distinct[c.which].entity});
  }
  std::sort(doc.spans.begin(), doc.spans.end(),
            [](const EntitySpan& a, const EntitySpan& b) { return a.start < b.start; });
  for (std::size_t k = 0; k < distinct.size(); ++k) {
    if (!located[k]) doc.unlocated.push_back(distinct[k].entity);
  }
  doc.colors = color_map(types);
  return doc;
}

inline nlohmann::ordered_json annotated_to_json(const AnnotatedDocument& doc) {
  nlohmann::ordered_json j;
  j["article"] = doc.article;
  auto& spans = j["spans"] = nlohmann::ordered_json::array();
  for (const auto& s : doc.spans) {
    nlohmann::ordered_json e;
    e["start"] = s.start;
    e["end"] = s.end;
    e["type"] = canonical_name(s.entity.type);
    e["text"] = s.entity.surface;
    spans.push_back(std::move(e));
  }
  auto& un = j["unlocated"] = nlohmann::ordered_json::array();
  for (const auto& e : doc.unlocated) un.push_back(entity_to_json(e));
  auto& colors = j["colors"] = nlohmann::ordered_json::object();
  for (const auto& [t, token] : doc.colors) colors[std::string(canonical_name(t))] = token;
  return j;
}

}  // namespace rena
