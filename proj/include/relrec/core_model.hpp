#pragma once
// In-memory catalogue store: entities, statements tagged with a named graph,
// and free-text records (biographies, collection descriptions).
//
// Not internally synchronized. Callers serialize mutations; concurrent
// const access is safe.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "relrec/error.hpp"

namespace relrec {

class EntityId {
 public:
  explicit EntityId(std::string value) : value_(std::move(value)) {
    if (value_.empty()) throw Error(ErrorCode::schema, "entity id must be non-empty");
  }

  const std::string& str() const noexcept { return value_; }

  // std::string comparison is byte-wise (char_traits<char> compares as unsigned char).
  friend auto operator<=>(const EntityId&, const EntityId&) = default;
  friend bool operator==(const EntityId&, const EntityId&) = default;

 private:
  std::string value_;
};

using EntityPair = std::pair<EntityId, EntityId>;

enum class EntityKind { historian, collection, institution, topic };

inline std::string_view to_string(EntityKind k) {
  switch (k) {
    case EntityKind::historian: return "historian";
    case EntityKind::collection: return "collection";
    case EntityKind::institution: return "institution";
    case EntityKind::topic: return "topic";
  }
  return "topic";
}

inline std::optional<EntityKind> parse_entity_kind(std::string_view s) {
  if (s == "historian") return EntityKind::historian;
  if (s == "collection") return EntityKind::collection;
  if (s == "institution") return EntityKind::institution;
  if (s == "topic") return EntityKind::topic;
  return std::nullopt;
}

// Relation vocabulary of the catalogue (snake_case tokens).
enum class Predicate {
  produced,
  subject,
  interacted_with,
  interacted_on,
  produced_by,
  includes_materials_relevant_to,
  held_by,
  is_related_to,
};

inline constexpr Predicate all_predicates[] = {
    Predicate::produced,        Predicate::subject,
    Predicate::interacted_with, Predicate::interacted_on,
    Predicate::produced_by,     Predicate::includes_materials_relevant_to,
    Predicate::held_by,         Predicate::is_related_to,
};

inline std::string_view to_string(Predicate p) {
  switch (p) {
    case Predicate::produced: return "produced";
    case Predicate::subject: return "subject";
    case Predicate::interacted_with: return "interacted_with";
    case Predicate::interacted_on: return "interacted_on";
    case Predicate::produced_by: return "produced_by";
    case Predicate::includes_materials_relevant_to: return "includes_materials_relevant_to";
    case Predicate::held_by: return "held_by";
    case Predicate::is_related_to: return "is_related_to";
  }
  return "subject";
}

inline std::optional<Predicate> parse_predicate(std::string_view s) {
  for (Predicate p : all_predicates)
    if (to_string(p) == s) return p;
  return std::nullopt;
}

inline Predicate require_predicate(std::string_view s) {
  auto p = parse_predicate(s);
  if (!p) throw Error(ErrorCode::vocabulary, "unknown predicate '" + std::string(s) + "'");
  return *p;
}

constexpr bool is_symmetric(Predicate p) {
  return p == Predicate::interacted_with || p == Predicate::is_related_to;
}

enum class StatementSource { catalogue, mention_detector, annotation, decision };

inline std::string_view to_string(StatementSource s) {
  switch (s) {
    case StatementSource::catalogue: return "catalogue";
    case StatementSource::mention_detector: return "mention_detector";
    case StatementSource::annotation: return "annotation";
    case StatementSource::decision: return "decision";
  }
  return "catalogue";
}

inline std::optional<StatementSource> parse_statement_source(std::string_view s) {
  if (s == "catalogue") return StatementSource::catalogue;
  if (s == "mention_detector") return StatementSource::mention_detector;
  if (s == "annotation") return StatementSource::annotation;
  if (s == "decision") return StatementSource::decision;
  return std::nullopt;
}

enum class TextField { biography, description };

inline std::string_view to_string(TextField f) {
  return f == TextField::biography ? "biography" : "description";
}

inline std::optional<TextField> parse_text_field(std::string_view s) {
  if (s == "biography") return TextField::biography;
  if (s == "description") return TextField::description;
  return std::nullopt;
}

struct Entity {
  EntityId id;
  EntityKind kind;
  std::string label;
  std::vector<std::string> aliases;
  std::optional<std::string> external_id;

  friend bool operator==(const Entity&, const Entity&) = default;
};

struct Statement {
  EntityId subject;
  Predicate predicate;
  EntityId object;
  std::string graph;
  StatementSource source = StatementSource::catalogue;

  // Uniqueness key; the source tag is provenance and does not participate.
  auto key() const { return std::tie(subject, predicate, object, graph); }
};

struct TextRecord {
  EntityId entity_id;
  TextField field;
  std::string text;

  friend bool operator==(const TextRecord&, const TextRecord&) = default;
};

inline EntityPair canonical_pair(const EntityId& a, const EntityId& b) {
  if (a == b) throw Error(ErrorCode::invalid_pair, "pair members must differ: " + a.str());
  return a < b ? EntityPair{a, b} : EntityPair{b, a};
}

class Store {
 public:
  using StatementKey = std::tuple<EntityId, Predicate, EntityId, std::string>;

  void add_entity(Entity e) {
    if (e.label.empty()) throw Error(ErrorCode::schema, "entity label must be non-empty: " + e.id.str());
    std::set<std::string> seen;
    for (const auto& a : e.aliases)
      if (!seen.insert(a).second)
        throw Error(ErrorCode::schema, "duplicate alias '" + a + "' on " + e.id.str());
    auto it = entities_.find(e.id);
    if (it != entities_.end()) {
      if (it->second == e) return;
      throw Error(ErrorCode::conflict, "entity " + e.id.str() + " already exists with different fields");
    }
    EntityId id = e.id;
    entities_.emplace(std::move(id), std::move(e));
  }

  const Entity* find(const EntityId& id) const {
    auto it = entities_.find(id);
    return it == entities_.end() ? nullptr : &it->second;
  }

  const Entity& at(const EntityId& id) const {
    if (const Entity* e = find(id)) return *e;
    throw Error(ErrorCode::not_found, "unknown entity " + id.str());
  }

  bool contains(const EntityId& id) const { return entities_.count(id) != 0; }

  const std::map<EntityId, Entity>& entities() const noexcept { return entities_; }

  std::vector<EntityId> entities_of_kind(EntityKind kind) const {
    std::vector<EntityId> out;
    for (const auto& [id, e] : entities_)
      if (e.kind == kind) out.push_back(id);
    return out;
  }

  // Returns false when the statement was already present.
  bool add_statement(Statement s) {
    if (!contains(s.subject))
      throw Error(ErrorCode::referential, "statement subject " + s.subject.str() + " does not exist");
    if (!contains(s.object))
      throw Error(ErrorCode::referential, "statement object " + s.object.str() + " does not exist");
    StatementKey key{s.subject, s.predicate, s.object, s.graph};
    if (statements_.count(key)) return false;
    statements_.emplace(std::move(key), s.source);
    by_subject_[s.subject].insert({s.predicate, s.object});
    by_object_[s.object].insert({s.predicate, s.subject});
    return true;
  }

  bool remove_statement(const EntityId& subject, Predicate p, const EntityId& object, const std::string& graph) {
    if (!statements_.erase(StatementKey{subject, p, object, graph})) return false;
    reindex(subject, object);
    return true;
  }

  std::size_t statement_count() const noexcept { return statements_.size(); }

  // Sorted by (subject, predicate, object, graph).
  std::vector<Statement> statements() const {
    std::vector<Statement> out;
    out.reserve(statements_.size());
    for (const auto& [k, src] : statements_)
      out.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k), src});
    return out;
  }

  bool has_statement(const EntityId& subject, Predicate p, const EntityId& object,
                     std::optional<std::string> graph = std::nullopt) const {
    if (graph) return statements_.count(StatementKey{subject, p, object, *graph}) != 0;
    auto it = by_subject_.find(subject);
    return it != by_subject_.end() && it->second.count({p, object}) != 0;
  }

  // True if (a p b) holds, or (b p a) for symmetric predicates.
  bool linked(const EntityId& a, Predicate p, const EntityId& b) const {
    return has_statement(a, p, b) || (is_symmetric(p) && has_statement(b, p, a));
  }

  // Objects across all named graphs.
  std::set<EntityId> objects_of(const EntityId& subject, Predicate p,
                                std::optional<EntityKind> kind = std::nullopt) const {
    at(subject);
    std::set<EntityId> out;
    auto it = by_subject_.find(subject);
    if (it == by_subject_.end()) return out;
    for (auto e = it->second.lower_bound({p, first_id()}); e != it->second.end() && e->first == p; ++e)
      if (!kind || entities_.at(e->second).kind == *kind) out.insert(e->second);
    return out;
  }

  std::set<EntityId> subjects_of(const EntityId& object, Predicate p,
                                 std::optional<EntityKind> kind = std::nullopt) const {
    at(object);
    std::set<EntityId> out;
    auto it = by_object_.find(object);
    if (it == by_object_.end()) return out;
    for (auto e = it->second.lower_bound({p, first_id()}); e != it->second.end() && e->first == p; ++e)
      if (!kind || entities_.at(e->second).kind == *kind) out.insert(e->second);
    return out;
  }

  std::set<EntityId> shared_objects(const EntityId& a, const EntityId& b, Predicate p,
                                    std::optional<EntityKind> kind = std::nullopt) const {
    if (a == b) throw Error(ErrorCode::invalid_pair, "shared_objects needs two distinct entities");
    auto oa = objects_of(a, p, kind);
    auto ob = objects_of(b, p, kind);
    std::set<EntityId> out;
    std::set_intersection(oa.begin(), oa.end(), ob.begin(), ob.end(), std::inserter(out, out.end()));
    return out;
  }

  // Collections produced by a historian, via either direction of the production link.
  std::set<EntityId> collections_of(const EntityId& historian) const {
    auto out = objects_of(historian, Predicate::produced, EntityKind::collection);
    auto back = subjects_of(historian, Predicate::produced_by, EntityKind::collection);
    out.insert(back.begin(), back.end());
    return out;
  }

  std::set<EntityId> producers_of(const EntityId& collection) const {
    auto out = objects_of(collection, Predicate::produced_by, EntityKind::historian);
    auto back = subjects_of(collection, Predicate::produced, EntityKind::historian);
    out.insert(back.begin(), back.end());
    return out;
  }

  // Replaces an existing record for the same (entity, field).
  void set_text(TextRecord r) {
    const Entity& e = at(r.entity_id);
    if (r.field == TextField::biography && e.kind != EntityKind::historian)
      throw Error(ErrorCode::kind, "biography on non-historian " + r.entity_id.str());
    if (r.field == TextField::description && e.kind != EntityKind::collection)
      throw Error(ErrorCode::kind, "description on non-collection " + r.entity_id.str());
    auto key = std::make_pair(r.entity_id, r.field);
    texts_.insert_or_assign(std::move(key), std::move(r));
  }

  const TextRecord* text(const EntityId& id, TextField f) const {
    auto it = texts_.find({id, f});
    return it == texts_.end() ? nullptr : &it->second;
  }

  const std::map<std::pair<EntityId, TextField>, TextRecord>& texts() const noexcept { return texts_; }

  // FNV-1a over the canonical serialization; identifies a store snapshot.
  std::uint64_t content_hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::string_view s) {
      for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
      }
      h ^= 0xff;
      h *= 1099511628211ULL;
    };
    for (const auto& [id, e] : entities_) {
      mix(id.str());
      mix(to_string(e.kind));
      mix(e.label);
      for (const auto& a : e.aliases) mix(a);
      mix(e.external_id.value_or(""));
    }
    for (const auto& [k, src] : statements_) {
      mix(std::get<0>(k).str());
      mix(to_string(std::get<1>(k)));
      mix(std::get<2>(k).str());
      mix(std::get<3>(k));
      mix(to_string(src));
    }
    for (const auto& [k, r] : texts_) {
      mix(r.entity_id.str());
      mix(to_string(r.field));
      mix(r.text);
    }
    return h;
  }

  friend bool operator==(const Store& a, const Store& b) {
    return a.entities_ == b.entities_ && a.statements_ == b.statements_ && a.texts_ == b.texts_;
  }

 private:
  static const EntityId& first_id() {
    static const EntityId min_id{std::string(1, '\0')};
    return min_id;
  }

  void reindex(const EntityId& subject, const EntityId& object) {
    auto rebuild = [this](const EntityId& id) {
      by_subject_.erase(id);
      by_object_.erase(id);
    };
    rebuild(subject);
    rebuild(object);
    for (const auto& [k, src] : statements_) {
      const auto& [s, p, o, g] = k;
      if (s == subject || s == object) by_subject_[s].insert({p, o});
      if (o == subject || o == object) by_object_[o].insert({p, s});
    }
  }

  std::map<EntityId, Entity> entities_;
  std::map<StatementKey, StatementSource> statements_;
  std::map<EntityId, std::set<std::pair<Predicate, EntityId>>> by_subject_;
  std::map<EntityId, std::set<std::pair<Predicate, EntityId>>> by_object_;
  std::map<std::pair<EntityId, TextField>, TextRecord> texts_;
};

}  // namespace relrec
