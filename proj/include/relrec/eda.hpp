#pragma once
// Exploratory statistics over annotated candidate tables and the weighted
// historian networks.

#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "relrec/expansion.hpp"

namespace relrec {

struct HistorianRelationStats {
  std::size_t total_relations = 0;
  std::size_t unique_pairs = 0;
  std::size_t valid_relations = 0;
  std::size_t valid_unique_pairs = 0;
  std::size_t valid_not_recorded = 0;
  std::optional<std::size_t> valid_on_shared_subject;  // absent for the institutions table

  // Auxiliary uniques
  std::size_t unique_historians = 0;
  std::size_t unique_subjects = 0;
  std::size_t valid_unique_historians = 0;
  std::size_t shared_subject_historians = 0;
  std::size_t shared_subject_pairs = 0;
  std::size_t shared_subject_subjects = 0;

  friend bool operator==(const HistorianRelationStats&, const HistorianRelationStats&) = default;
};

struct CollectionRelationStats {
  std::size_t valid_collection_relations = 0;
  std::size_t not_recorded_in_biographies = 0;

  friend bool operator==(const CollectionRelationStats&, const CollectionRelationStats&) = default;
};

namespace detail {

inline void require_annotations(const ExpandedDataset& ds) {
  std::string missing;
  std::size_t n = 0;
  for (const auto& r : ds.rows) {
    if (r.annotation) continue;
    if (n++ < 20)
      missing += (missing.empty() ? "" : "; ") + r.pair.first.str() + "," + r.pair.second.str() + "," +
                 r.shared_subject.str();
  }
  if (n)
    throw Error(ErrorCode::incomplete_data,
                std::to_string(n) + " rows of " + ds.name() + " have no annotation", missing);
}

}  // namespace detail

inline HistorianRelationStats historian_stats(const ExpandedDataset& ds) {
  detail::require_annotations(ds);
  HistorianRelationStats s;
  std::set<EntityPair> pairs, valid_pairs, shared_pairs;
  std::set<EntityId> historians, subjects, valid_historians, shared_historians, shared_subjects;
  std::size_t on_subject = 0;
  for (const auto& r : ds.rows) {
    ++s.total_relations;
    pairs.insert(r.pair);
    historians.insert(r.pair.first);
    historians.insert(r.pair.second);
    subjects.insert(r.shared_subject);
    if (!r.valid()) continue;
    ++s.valid_relations;
    valid_pairs.insert(r.pair);
    valid_historians.insert(r.pair.first);
    valid_historians.insert(r.pair.second);
    if (!r.flags.bio_one) ++s.valid_not_recorded;
    if (is_one(r.annotation->collaborated_on_subject)) {
      ++on_subject;
      shared_pairs.insert(r.pair);
      shared_historians.insert(r.pair.first);
      shared_historians.insert(r.pair.second);
      shared_subjects.insert(r.shared_subject);
    }
  }
  s.unique_pairs = pairs.size();
  s.valid_unique_pairs = valid_pairs.size();
  if (ds.table == AnnotationTable::artists_periods) s.valid_on_shared_subject = on_subject;
  s.unique_historians = historians.size();
  s.unique_subjects = subjects.size();
  s.valid_unique_historians = valid_historians.size();
  s.shared_subject_historians = shared_historians.size();
  s.shared_subject_pairs = shared_pairs.size();
  s.shared_subject_subjects = shared_subjects.size();
  return s;
}

inline HistorianRelationStats merged_stats(const ExpandedDataset& merged) { return historian_stats(merged); }

inline CollectionRelationStats collection_stats(const ExpandedDataset& ds) {
  if (ds.table != AnnotationTable::artists_periods)
    throw Error(ErrorCode::unsupported_table, "collection statistics need the A8/A10 columns of artists_periods");
  detail::require_annotations(ds);
  CollectionRelationStats s;
  for (const auto& r : ds.rows) {
    if (!r.valid()) continue;
    if (!is_one(r.annotation->h2_relevant_to_h1_archive) && !is_one(r.annotation->h1_relevant_to_h2_archive))
      continue;
    ++s.valid_collection_relations;
    if (!r.flags.bio_one) ++s.not_recorded_in_biographies;
  }
  return s;
}

struct NetworkNode {
  EntityId id;
  std::string label;
  EntityKind kind;
};

struct NetworkEdge {
  EntityPair pair;
  std::size_t weight = 0;  // shared subjects
  std::vector<EntityId> shared;
};

struct NetworkExport {
  std::vector<NetworkNode> nodes;
  std::vector<NetworkEdge> edges;
  double density = 0.0;
  std::vector<std::vector<EntityId>> components;
};

enum class NetworkMode { topics, institutions };

// Nodes are every historian of the store; density = 2|E| / (n(n-1)).
inline NetworkExport network_export(const Store& store, const ExpandedDataset& ds) {
  NetworkExport net;
  std::map<EntityId, std::size_t> node_index;
  for (const EntityId& h : store.entities_of_kind(EntityKind::historian)) {
    node_index[h] = net.nodes.size();
    const Entity& e = store.at(h);
    net.nodes.push_back({h, e.label, e.kind});
  }
  std::map<EntityPair, NetworkEdge> edges;
  for (const auto& r : ds.rows) {
    auto& e = edges.try_emplace(r.pair, NetworkEdge{r.pair, 0, {}}).first->second;
    ++e.weight;
    e.shared.push_back(r.shared_subject);
  }
  for (auto& [p, e] : edges) net.edges.push_back(std::move(e));
  std::size_t n = net.nodes.size();
  if (n >= 2) net.density = 2.0 * static_cast<double>(net.edges.size()) / (static_cast<double>(n) * (n - 1));

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : net.edges) {
    auto a = node_index.find(e.pair.first), b = node_index.find(e.pair.second);
    if (a == node_index.end() || b == node_index.end()) continue;
    std::size_t ra = find(a->second), rb = find(b->second);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  std::map<std::size_t, std::vector<EntityId>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(net.nodes[i].id);
  for (auto& [root, members] : groups) net.components.push_back(std::move(members));
  return net;
}

inline NetworkExport network_export(const Store& store, const ExpandedDataset& ds, NetworkMode mode) {
  auto want = mode == NetworkMode::topics ? AnnotationTable::artists_periods : AnnotationTable::institutions;
  if (ds.table != want) throw Error(ErrorCode::parameter, "network mode does not match dataset " + ds.name());
  return network_export(store, ds);
}

inline nlohmann::json to_json(const NetworkExport& net) {
  using nlohmann::json;
  json nodes = json::array(), edges = json::array(), comps = json::array();
  for (const auto& n : net.nodes) nodes.push_back({{"id", n.id.str()}, {"label", n.label}, {"kind", to_string(n.kind)}});
  for (const auto& e : net.edges) {
    json shared = json::array();
    for (const auto& s : e.shared) shared.push_back(s.str());
    edges.push_back({{"source", e.pair.first.str()}, {"target", e.pair.second.str()}, {"weight", e.weight},
                     {"shared", shared}});
  }
  for (const auto& c : net.components) {
    json ids = json::array();
    for (const auto& id : c) ids.push_back(id.str());
    comps.push_back(ids);
  }
  return {{"nodes", nodes}, {"edges", edges}, {"density", net.density}, {"components", comps}};
}

inline nlohmann::json to_json(const HistorianRelationStats& s) {
  nlohmann::json j{{"total_relations", s.total_relations},
                   {"unique_pairs", s.unique_pairs},
                   {"valid_relations", s.valid_relations},
                   {"valid_unique_pairs", s.valid_unique_pairs},
                   {"valid_not_recorded", s.valid_not_recorded},
                   {"valid_on_shared_subject", nullptr},
                   {"unique_historians", s.unique_historians},
                   {"unique_subjects", s.unique_subjects},
                   {"valid_unique_historians", s.valid_unique_historians},
                   {"shared_subject_historians", s.shared_subject_historians},
                   {"shared_subject_pairs", s.shared_subject_pairs},
                   {"shared_subject_subjects", s.shared_subject_subjects}};
  if (s.valid_on_shared_subject) j["valid_on_shared_subject"] = *s.valid_on_shared_subject;
  return j;
}

inline nlohmann::json to_json(const CollectionRelationStats& s) {
  return {{"valid_collection_relations", s.valid_collection_relations},
          {"not_recorded_in_biographies", s.not_recorded_in_biographies}};
}

struct EdaReport {
  HistorianRelationStats topics;
  HistorianRelationStats institutions;
  HistorianRelationStats merged;
  CollectionRelationStats collections_topics;
  CollectionRelationStats collections_merged;
  double topic_density = 0.0;
  double institution_density = 0.0;
  std::size_t uncertain_labels = 0;

  friend bool operator==(const EdaReport&, const EdaReport&) = default;
};

inline EdaReport build_eda_report(const Store& store, const ExpandedDataset& topics, const ExpandedDataset& insts,
                                  const ExpandedDataset& merged, std::size_t uncertain_labels = 0) {
  EdaReport r;
  r.topics = historian_stats(topics);
  r.institutions = historian_stats(insts);
  r.merged = merged_stats(merged);
  r.collections_topics = collection_stats(topics);
  r.collections_merged = collection_stats(merged);
  r.topic_density = network_export(store, topics).density;
  r.institution_density = network_export(store, insts).density;
  r.uncertain_labels = uncertain_labels;
  return r;
}

inline nlohmann::json to_json(const EdaReport& r) {
  return {{"historians",
           {{"topics", to_json(r.topics)}, {"institutions", to_json(r.institutions)}, {"merged", to_json(r.merged)}}},
          {"collections", {{"topics", to_json(r.collections_topics)}, {"merged", to_json(r.collections_merged)}}},
          {"density", {{"topics", r.topic_density}, {"institutions", r.institution_density}}},
          {"uncertain_labels_replaced", r.uncertain_labels}};
}

namespace detail {

inline std::string pct(std::size_t part, std::size_t whole) {
  if (whole == 0) return "n/a";
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << 100.0 * static_cast<double>(part) / static_cast<double>(whole) << "%";
  return os.str();
}

}  // namespace detail

// Text layout mirrors the two EDA tables; percentages are recomputed from counts.
inline void write_report_text(std::ostream& out, const EdaReport& r) {
  auto row = [&](const char* name, const HistorianRelationStats& s) {
    out << std::left << std::setw(44) << name << std::right << std::setw(7) << s.total_relations << std::setw(7)
        << s.unique_pairs << std::setw(7) << s.valid_relations << std::setw(7) << s.valid_unique_pairs
        << std::setw(7) << s.valid_not_recorded << std::setw(7)
        << (s.valid_on_shared_subject ? std::to_string(*s.valid_on_shared_subject) : "n/a") << "\n";
  };
  out << "Relations between historians\n";
  out << std::left << std::setw(44) << "" << std::right << std::setw(7) << "1" << std::setw(7) << "2" << std::setw(7)
      << "3" << std::setw(7) << "4" << std::setw(7) << "5" << std::setw(7) << "6" << "\n";
  row("1. At least one topic in common", r.topics);
  row("2. At least one institution in common", r.institutions);
  row("3. At least one institution and one topic", r.merged);
  out << "  columns: 1 total relations, 2 unique pairs, 3 valid relations, 4 valid unique pairs,\n"
         "           5 valid relations not recorded in biographies, 6 valid relations on the shared topic\n";
  for (auto [name, s] : {std::pair{"topics", &r.topics}, std::pair{"institutions", &r.institutions},
                         std::pair{"merged", &r.merged}}) {
    out << "  " << name << ": valid " << detail::pct(s->valid_relations, s->total_relations) << " of relations, "
        << detail::pct(s->valid_not_recorded, s->valid_relations) << " of valid relations not recorded; "
        << s->unique_historians << " historians, " << s->unique_subjects << " subjects";
    if (s->valid_on_shared_subject)
      out << "; on-subject: " << s->shared_subject_historians << " historians in " << s->shared_subject_pairs
          << " pairs, " << s->shared_subject_subjects << " subjects";
    out << "\n";
  }
  out << "\nRelations between historians and collections\n";
  out << std::left << std::setw(44) << "1. At least one topic in common" << std::right << std::setw(7)
      << r.collections_topics.valid_collection_relations << std::setw(7)
      << r.collections_topics.not_recorded_in_biographies << "\n";
  out << std::left << std::setw(44) << "2. At least one institution and one topic" << std::right << std::setw(7)
      << r.collections_merged.valid_collection_relations << std::setw(7)
      << r.collections_merged.not_recorded_in_biographies << "\n";
  out << "\nNetwork density: topics " << std::fixed << std::setprecision(4) << r.topic_density << ", institutions "
      << r.institution_density << "\n";
  out << "Uncertain labels replaced with 0: " << r.uncertain_labels << "\n";
  out << "\n--- counts ---\n" << to_json(r).dump() << "\n";
}

}  // namespace relrec
