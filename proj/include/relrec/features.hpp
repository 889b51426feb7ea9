#pragma once
// Pair-level feature construction. Classification units are unique pairs;
// a pair's label is the logical OR over its annotated rows.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relrec/expansion.hpp"

namespace relrec {

enum class Feature { bio_mention, arch_mention, n_shared_topics, n_shared_institutions };

inline std::string_view to_string(Feature f) {
  switch (f) {
    case Feature::bio_mention: return "bio_mention";
    case Feature::arch_mention: return "arch_mention";
    case Feature::n_shared_topics: return "n_shared_topics";
    case Feature::n_shared_institutions: return "n_shared_institutions";
  }
  return "bio_mention";
}

constexpr bool is_binary(Feature f) { return f == Feature::bio_mention || f == Feature::arch_mention; }

struct FeatureSpec {
  std::string name;
  std::vector<Feature> features;

  bool uses(Feature f) const { return std::find(features.begin(), features.end(), f) != features.end(); }
  bool needs_topic_table() const {
    return uses(Feature::bio_mention) || uses(Feature::arch_mention) || uses(Feature::n_shared_topics);
  }
  bool needs_institution_table() const { return uses(Feature::n_shared_institutions); }

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

inline const std::vector<FeatureSpec>& feature_specs() {
  using F = Feature;
  static const std::vector<FeatureSpec> specs{
      {"bio", {F::bio_mention}},
      {"arch_desc", {F::arch_mention}},
      {"bio+arch_desc", {F::bio_mention, F::arch_mention}},
      {"topics", {F::n_shared_topics}},
      {"topics+bio", {F::n_shared_topics, F::bio_mention}},
      {"topics+arch_desc", {F::n_shared_topics, F::arch_mention}},
      {"topics+bio+arch_desc", {F::n_shared_topics, F::bio_mention, F::arch_mention}},
      {"inst", {F::n_shared_institutions}},
      {"inst+topics", {F::n_shared_institutions, F::n_shared_topics}},
  };
  return specs;
}

inline const FeatureSpec& feature_spec(std::string_view name) {
  for (const auto& s : feature_specs())
    if (s.name == name) return s;
  throw Error(ErrorCode::parameter, "unknown feature spec '" + std::string(name) + "'");
}

enum class Unit { historian_pair, collection_pair };

inline std::string_view to_string(Unit u) { return u == Unit::historian_pair ? "historian_pair" : "collection_pair"; }

inline std::optional<Unit> parse_unit(std::string_view s) {
  if (s == "historian_pair" || s == "historians") return Unit::historian_pair;
  if (s == "collection_pair" || s == "collections") return Unit::collection_pair;
  return std::nullopt;
}

// Column layout of the two evaluation grids.
inline std::vector<std::string> grid_spec_names(Unit u) {
  if (u == Unit::historian_pair)
    return {"bio", "arch_desc", "bio+arch_desc", "topics", "topics+bio",
            "topics+arch_desc", "topics+bio+arch_desc", "inst", "inst+topics"};
  return {"bio", "topics", "topics+bio", "inst", "inst+topics"};
}

struct PairSummary {
  EntityPair pair;
  std::vector<EntityId> shared_topics;
  std::vector<EntityId> shared_institutions;
  DerivedFlags flags;
  bool in_topic_table = false;
  bool in_institution_table = false;
  // Labels aggregated over annotated rows; absent when no row is annotated.
  std::optional<int> historian_label_topics;
  std::optional<int> historian_label_institutions;
  std::optional<int> collection_label;
};

using PairSummaries = std::map<EntityPair, PairSummary>;

inline PairSummaries summarize_pairs(const ExpandedDataset* topics, const ExpandedDataset* insts) {
  PairSummaries out;
  auto fold = [](std::optional<int>& dst, bool v) { dst = std::max(dst.value_or(0), v ? 1 : 0); };
  auto entry = [&](const EntityPair& p) -> PairSummary& {
    return out.try_emplace(p, PairSummary{p, {}, {}, {}, false, false, {}, {}, {}}).first->second;
  };
  if (topics) {
    for (const auto& r : topics->rows) {
      auto& s = entry(r.pair);
      s.in_topic_table = true;
      s.shared_topics.push_back(r.shared_subject);
      s.flags |= r.flags;
      if (r.annotation) {
        fold(s.historian_label_topics, is_one(r.annotation->relation_exists));
        fold(s.collection_label, is_one(r.annotation->h2_relevant_to_h1_archive) ||
                                     is_one(r.annotation->h1_relevant_to_h2_archive));
      }
    }
  }
  if (insts) {
    for (const auto& r : insts->rows) {
      auto& s = entry(r.pair);
      s.in_institution_table = true;
      s.shared_institutions.push_back(r.shared_subject);
      s.flags |= r.flags;
      if (r.annotation) fold(s.historian_label_institutions, is_one(r.annotation->relation_exists));
    }
  }
  return out;
}

inline std::vector<double> feature_vector(const PairSummary& s, const FeatureSpec& spec) {
  std::vector<double> x;
  x.reserve(spec.features.size());
  for (Feature f : spec.features) {
    switch (f) {
      case Feature::bio_mention: x.push_back(s.flags.bio_one ? 1.0 : 0.0); break;
      case Feature::arch_mention: x.push_back(s.flags.arch_any() ? 1.0 : 0.0); break;
      case Feature::n_shared_topics: x.push_back(static_cast<double>(s.shared_topics.size())); break;
      case Feature::n_shared_institutions: x.push_back(static_cast<double>(s.shared_institutions.size())); break;
    }
  }
  return x;
}

// Which pairs a (spec, unit) classifies. Historian units cover the tables the
// spec draws on; collection units need the archive columns, so they always
// range over the topic table.
inline bool in_universe(const PairSummary& s, const FeatureSpec& spec, Unit unit) {
  if (unit == Unit::collection_pair) return s.in_topic_table;
  return (spec.needs_topic_table() && s.in_topic_table) || (spec.needs_institution_table() && s.in_institution_table);
}

inline std::optional<int> pair_label(const PairSummary& s, const FeatureSpec& spec, Unit unit) {
  if (unit == Unit::collection_pair) return s.collection_label;
  std::optional<int> y;
  if (spec.needs_topic_table() && s.historian_label_topics) y = *s.historian_label_topics;
  if (spec.needs_institution_table() && s.historian_label_institutions)
    y = std::max(y.value_or(0), *s.historian_label_institutions);
  return y;
}

struct LabeledRow {
  EntityPair pair;
  std::vector<double> x;
  int y = 0;
  DerivedFlags flags;
};

struct LabeledDataset {
  Unit unit = Unit::historian_pair;
  FeatureSpec spec;
  std::vector<LabeledRow> rows;  // sorted by pair

  std::vector<int> labels() const {
    std::vector<int> y;
    y.reserve(rows.size());
    for (const auto& r : rows) y.push_back(r.y);
    return y;
  }
};

inline void check_tables(const ExpandedDataset* topics, const ExpandedDataset* insts, const FeatureSpec& spec,
                         Unit unit) {
  if ((spec.needs_topic_table() || unit == Unit::collection_pair) && !topics)
    throw Error(ErrorCode::missing_input, "spec " + spec.name + " needs the artists_periods table");
  if (spec.needs_institution_table() && !insts)
    throw Error(ErrorCode::missing_input, "spec " + spec.name + " needs the institutions table");
}

// Pairs without any annotated row in the relevant tables are left out.
inline LabeledDataset build_features(const ExpandedDataset* topics, const ExpandedDataset* insts,
                                     const FeatureSpec& spec, Unit unit) {
  check_tables(topics, insts, spec, unit);
  LabeledDataset out{unit, spec, {}};
  for (const auto& [pair, s] : summarize_pairs(topics, insts)) {
    if (!in_universe(s, spec, unit)) continue;
    auto y = pair_label(s, spec, unit);
    if (!y) continue;
    out.rows.push_back({pair, feature_vector(s, spec), *y, s.flags});
  }
  return out;
}

// Replaces labels of pairs that reviewers have decided on.
inline void apply_label_overrides(LabeledDataset& data, const std::map<EntityPair, int>& overrides) {
  for (auto& r : data.rows)
    if (auto it = overrides.find(r.pair); it != overrides.end()) r.y = it->second;
}

}  // namespace relrec
