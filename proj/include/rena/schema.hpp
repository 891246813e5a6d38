#pragma once

// Closed vocabulary of entity and relation types and the legal
// (subject type, relation, object type) combinations.

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rena/text.hpp"

namespace rena {

enum class EntityType : std::uint8_t {
  infectious_disease,
  pathogen,
  symptom_syndrome,
  location,
  event_date,
  case_number,
  death_number,
  people,
};

inline constexpr std::array<EntityType, 8> kEntityTypes{
    EntityType::infectious_disease, EntityType::pathogen,     EntityType::symptom_syndrome,
    EntityType::location,           EntityType::event_date,   EntityType::case_number,
    EntityType::death_number,       EntityType::people,
};

enum class RelationType : std::uint8_t {
  located_at,
  occurred_on,
  are_symptoms_of,
  deaths_of,
  cases_of,
  caused_by,
  affected_by,
};

inline constexpr std::array<RelationType, 7> kRelationTypes{
    RelationType::located_at, RelationType::occurred_on, RelationType::are_symptoms_of,
    RelationType::deaths_of,  RelationType::cases_of,    RelationType::caused_by,
    RelationType::affected_by,
};

constexpr std::string_view canonical_name(EntityType t) {
  switch (t) {
    case EntityType::infectious_disease: return "infectious_disease";
    case EntityType::pathogen: return "pathogen";
    case EntityType::symptom_syndrome: return "symptom_syndrome";
    case EntityType::location: return "location";
    case EntityType::event_date: return "event_date";
    case EntityType::case_number: return "case_number";
    case EntityType::death_number: return "death_number";
    case EntityType::people: return "people";
  }
  return "";
}

constexpr std::string_view canonical_name(RelationType r) {
  switch (r) {
    case RelationType::located_at: return "located_at";
    case RelationType::occurred_on: return "occurred_on";
    case RelationType::are_symptoms_of: return "are_symptoms_of";
    case RelationType::deaths_of: return "deaths_of";
    case RelationType::cases_of: return "cases_of";
    case RelationType::caused_by: return "caused_by";
    case RelationType::affected_by: return "affected_by";
  }
  return "";
}

/// The phrase a model writes for a relation, e.g. "located at".
constexpr std::string_view surface_form(RelationType r) {
  switch (r) {
    case RelationType::located_at: return "located at";
    case RelationType::occurred_on: return "occurred on";
    case RelationType::are_symptoms_of: return "are symptoms of";
    case RelationType::deaths_of: return "deaths of";
    case RelationType::cases_of: return "cases of";
    case RelationType::caused_by: return "caused by";
    case RelationType::affected_by: return "affected by";
  }
  return "";
}

/// Key used when writing an entity into a numbered triple line.
constexpr std::string_view surface_key(EntityType t) {
  switch (t) {
    case EntityType::infectious_disease: return "infectious disease";
    case EntityType::pathogen: return "pathogen";
    case EntityType::symptom_syndrome: return "symptom/syndrome";
    case EntityType::location: return "location";
    case EntityType::event_date: return "event date";
    case EntityType::case_number: return "case numbers";
    case EntityType::death_number: return "death numbers";
    case EntityType::people: return "people";
  }
  return "";
}

namespace detail {

struct EntityAlias {
  std::string_view key;
  EntityType type;
};

// Keys are stored already normalized (casefolded, single spaces).
inline constexpr std::array<EntityAlias, 28> kEntityAliases{{
    {"infectious_disease", EntityType::infectious_disease},
    {"infectious disease", EntityType::infectious_disease},
    {"disease", EntityType::infectious_disease},
    {"pathogen", EntityType::pathogen},
    {"symptom_syndrome", EntityType::symptom_syndrome},
    {"syndrome", EntityType::symptom_syndrome},
    {"symptom", EntityType::symptom_syndrome},
    {"symptom/syndrome", EntityType::symptom_syndrome},
    {"location", EntityType::location},
    {"event_date", EntityType::event_date},
    {"event date", EntityType::event_date},
    {"date", EntityType::event_date},
    {"case_number", EntityType::case_number},
    {"new confirmed cases", EntityType::case_number},
    {"case numbers", EntityType::case_number},
    {"case number", EntityType::case_number},
    {"death_number", EntityType::death_number},
    {"overall confirmed deaths", EntityType::death_number},
    {"death numbers", EntityType::death_number},
    {"death number", EntityType::death_number},
    {"people", EntityType::people},
    {"host", EntityType::people},
    {"symptoms", EntityType::symptom_syndrome},
    {"syndromes", EntityType::symptom_syndrome},
    {"symptoms/syndromes", EntityType::symptom_syndrome},
    {"locations", EntityType::location},
    {"pathogens", EntityType::pathogen},
    {"diseases", EntityType::infectious_disease},
}};

struct RelationAlias {
  std::string_view key;
  RelationType type;
};

inline constexpr std::array<RelationAlias, 15> kRelationAliases{{
    {"located at", RelationType::located_at},
    {"located_at", RelationType::located_at},
    {"occurred on", RelationType::occurred_on},
    {"occurred_on", RelationType::occurred_on},
    {"are symptoms of", RelationType::are_symptoms_of},
    {"are_symptoms_of", RelationType::are_symptoms_of},
    {"deaths of", RelationType::deaths_of},
    {"deaths_of", RelationType::deaths_of},
    {"death of", RelationType::deaths_of},
    {"cases of", RelationType::cases_of},
    {"cases_of", RelationType::cases_of},
    {"caused by", RelationType::caused_by},
    {"caused_by", RelationType::caused_by},
    {"affected by", RelationType::affected_by},
    {"affected_by", RelationType::affected_by},
}};

}  // namespace detail

inline std::vector<std::string_view> aliases(EntityType t) {
  std::vector<std::string_view> out;
  for (const auto& a : detail::kEntityAliases) {
    if (a.type == t) out.push_back(a.key);
  }
  return out;
}

class UnknownEntityKey : public std::runtime_error {
 public:
  explicit UnknownEntityKey(std::string key)
      : std::runtime_error("unknown entity key: \"" + key + "\""), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class UnknownRelation : public std::runtime_error {
 public:
  explicit UnknownRelation(std::string name)
      : std::runtime_error("unknown relation: \"" + name + "\""), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

inline std::optional<EntityType> find_entity_type(std::string_view key) {
  const std::string norm = text::normalize_key(key);
  for (const auto& a : detail::kEntityAliases) {
    if (a.key == norm) return a.type;
  }
  return std::nullopt;
}

inline EntityType entity_type_from_key(std::string_view key) {
  if (auto t = find_entity_type(key)) return *t;
  throw UnknownEntityKey(std::string(key));
}

inline std::optional<RelationType> find_relation(std::string_view surface) {
  const std::string norm = text::normalize_key(surface);
  for (const auto& a : detail::kRelationAliases) {
    if (a.key == norm) return a.type;
  }
  return std::nullopt;
}

inline RelationType relation_from_surface(std::string_view surface) {
  if (auto r = find_relation(surface)) return *r;
  throw UnknownRelation(std::string(surface));
}

struct Entity {
  EntityType type{};
  std::string surface;

  friend bool operator==(const Entity&, const Entity&) = default;
  friend auto operator<=>(const Entity&, const Entity&) = default;
};

struct RelationTriple {
  Entity subject;
  RelationType relation{};
  Entity object;

  friend bool operator==(const RelationTriple&, const RelationTriple&) = default;
  friend auto operator<=>(const RelationTriple&, const RelationTriple&) = default;
};

inline RelationTriple reversed(const RelationTriple& t) { return {t.object, t.relation, t.subject}; }

struct TypedPair {
  EntityType subject{};
  RelationType relation{};
  EntityType object{};

  friend bool operator==(const TypedPair&, const TypedPair&) = default;
  friend auto operator<=>(const TypedPair&, const TypedPair&) = default;
};

enum class ValidationMode { strict, symmetric };

struct Verdict {
  bool valid = false;
  // Set when only the reversed (object, subject) order is legal.
  bool reversed = false;
  std::string reason;

  static Verdict ok(bool was_reversed = false) { return {true, was_reversed, {}}; }
  static Verdict invalid(std::string why) { return {false, false, std::move(why)}; }
};

struct SchemaOptions {
  // Accept (death_number, deaths_of, people), the shape of the fourth line of
  // the one-shot example output.
  bool host_deaths_extension = false;
};

class RelationSchema {
 public:
  explicit RelationSchema(std::vector<TypedPair> pairs) : pairs_(std::move(pairs)) {
    std::sort(pairs_.begin(), pairs_.end());
    pairs_.erase(std::unique(pairs_.begin(), pairs_.end()), pairs_.end());
  }

  const std::vector<TypedPair>& pairs() const noexcept { return pairs_; }
  std::size_t size() const noexcept { return pairs_.size(); }

  bool allows(EntityType subject, RelationType relation, EntityType object) const {
    return std::binary_search(pairs_.begin(), pairs_.end(), TypedPair{subject, relation, object});
  }

  Verdict validate(const RelationTriple& t, ValidationMode mode) const {
    if (allows(t.subject.type, t.relation, t.object.type)) return Verdict::ok();
    if (mode == ValidationMode::symmetric && allows(t.object.type, t.relation, t.subject.type)) {
      return Verdict::ok(true);
    }
    return Verdict::invalid("pair (" + std::string(canonical_name(t.subject.type)) + ", " +
                            std::string(canonical_name(t.relation)) + ", " +
                            std::string(canonical_name(t.object.type)) + ") not in schema");
  }

  /// {"entity_types":[{"name","aliases"}], "relations":[{"name","pairs":[[s,o],...]}]}
  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json doc;
    auto& types = doc["entity_types"] = nlohmann::ordered_json::array();
    for (auto t : kEntityTypes) {
      nlohmann::ordered_json entry;
      entry["name"] = canonical_name(t);
      auto& al = entry["aliases"] = nlohmann::ordered_json::array();
      for (auto a : aliases(t)) al.push_back(a);
      types.push_back(std::move(entry));
    }
    auto& rels = doc["relations"] = nlohmann::ordered_json::array();
    for (auto r : kRelationTypes) {
      nlohmann::ordered_json entry;
      entry["name"] = canonical_name(r);
      auto& ps = entry["pairs"] = nlohmann::ordered_json::array();
      for (const auto& p : pairs_) {
        if (p.relation == r) ps.push_back({canonical_name(p.subject), canonical_name(p.object)});
      }
      rels.push_back(std::move(entry));
    }
    return doc;
  }

 private:
  std::vector<TypedPair> pairs_;
};

/// The twelve declared pairs, read "X is between: A - B" as subject A, object B.
inline RelationSchema default_schema(SchemaOptions options = {}) {
  using E = EntityType;
  using R = RelationType;
  std::vector<TypedPair> pairs{
      {E::infectious_disease, R::located_at, E::location},
      {E::symptom_syndrome, R::located_at, E::location},
      {E::case_number, R::located_at, E::location},
      {E::infectious_disease, R::occurred_on, E::event_date},
      {E::symptom_syndrome, R::occurred_on, E::event_date},
      {E::case_number, R::occurred_on, E::event_date},
      {E::infectious_disease, R::are_symptoms_of, E::symptom_syndrome},
      {E::infectious_disease, R::deaths_of, E::death_number},
      {E::infectious_disease, R::cases_of, E::case_number},
      {E::symptom_syndrome, R::cases_of, E::case_number},
      {E::infectious_disease, R::caused_by, E::pathogen},
      {E::people, R::affected_by, E::infectious_disease},
  };
  if (options.host_deaths_extension) pairs.push_back({E::death_number, R::deaths_of, E::people});
  return RelationSchema(std::move(pairs));
}

inline Verdict validate_triple(const RelationSchema& schema, const RelationTriple& triple,
                               ValidationMode mode) {
  return schema.validate(triple, mode);
}

inline std::optional<EntityType> entity_type_from_name(std::string_view name) {
  for (auto t : kEntityTypes) {
    if (canonical_name(t) == name) return t;
  }
  return std::nullopt;
}

inline std::optional<RelationType> relation_from_name(std::string_view name) {
  for (auto r : kRelationTypes) {
    if (canonical_name(r) == name) return r;
  }
  return std::nullopt;
}

// JSON shape shared by parse reports, gold corpora and datasets:
// {"subject":{"type","text"},"relation","object":{"type","text"}}

inline nlohmann::ordered_json entity_to_json(const Entity& e) {
  nlohmann::ordered_json j;
  j["type"] = canonical_name(e.type);
  j["text"] = e.surface;
  return j;
}

inline nlohmann::ordered_json triple_to_json(const RelationTriple& t) {
  nlohmann::ordered_json j;
  j["subject"] = entity_to_json(t.subject);
  j["relation"] = canonical_name(t.relation);
  j["object"] = entity_to_json(t.object);
  return j;
}

template <class Json>
Entity entity_from_json(const Json& j) {
  if (!j.is_object()) throw std::invalid_argument("entity must be an object");
  const auto& type = j.at("type");
  const auto& txt = j.at("text");
  if (!type.is_string() || !txt.is_string()) throw std::invalid_argument("entity type/text must be strings");
  auto t = entity_type_from_name(type.template get<std::string>());
  if (!t) t = find_entity_type(type.template get<std::string>());
  if (!t) throw UnknownEntityKey(type.template get<std::string>());
  auto surface = txt.template get<std::string>();
  if (text::trim(surface).empty()) throw std::invalid_argument("entity text is empty");
  return {*t, std::move(surface)};
}

template <class Json>
RelationTriple triple_from_json(const Json& j) {
  if (!j.is_object()) throw std::invalid_argument("triple must be an object");
  const auto& rel = j.at("relation");
  if (!rel.is_string()) throw std::invalid_argument("relation must be a string");
  auto name = rel.template get<std::string>();
  auto r = relation_from_name(name);
  if (!r) r = find_relation(name);
  if (!r) throw UnknownRelation(name);
  return {entity_from_json(j.at("subject")), *r, entity_from_json(j.at("object"))};
}

}  // namespace rena
