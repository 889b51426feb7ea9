#pragma once
// Candidate-pair expansion: one row per (historian pair, shared subject).
// A pair sharing k topics (or institutions) appears in k rows.

#include <chrono>
#include <ctime>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "relrec/core_model.hpp"
#include "relrec/csv.hpp"
#include "relrec/ingest.hpp"
#include "relrec/mentions.hpp"

namespace relrec {

struct DerivedFlags {
  bool bio_one = false;      // one historian mentioned in the other's biography
  bool bio_both = false;     // mentioned in both directions
  bool arch_a = false;       // second historian mentioned in an archive of the first
  bool arch_b = false;       // first historian mentioned in an archive of the second
  bool materials_a = false;  // first historian's archive holds materials relevant to the second (annotation only)
  bool materials_b = false;

  bool arch_any() const { return arch_a || arch_b; }
  bool materials_any() const { return materials_a || materials_b; }

  DerivedFlags& operator|=(const DerivedFlags& o) {
    bio_one |= o.bio_one;
    bio_both |= o.bio_both;
    arch_a |= o.arch_a;
    arch_b |= o.arch_b;
    materials_a |= o.materials_a;
    materials_b |= o.materials_b;
    return *this;
  }

  friend bool operator==(const DerivedFlags&, const DerivedFlags&) = default;
};

struct PairRow {
  EntityPair pair;  // canonical
  EntityId shared_subject;
  AnnotationTable table;
  std::optional<AnnotationRecord> annotation;  // stored in canonical orientation
  DerivedFlags flags;

  auto sort_key() const { return std::tie(pair, shared_subject); }
  bool valid() const { return annotation && is_one(annotation->relation_exists); }

  friend bool operator==(const PairRow&, const PairRow&) = default;
};

struct DatasetProvenance {
  std::uint64_t store_hash = 0;
  std::string created_at;  // UTC, informational only
};

struct ExpandedDataset {
  AnnotationTable table = AnnotationTable::artists_periods;
  bool merged = false;  // topic rows restricted to pairs that also share an institution
  std::vector<PairRow> rows;
  DatasetProvenance provenance;

  std::string name() const { return merged ? "merged" : std::string(to_string(table)); }

  std::set<EntityPair> unique_pairs() const {
    std::set<EntityPair> out;
    for (const auto& r : rows) out.insert(r.pair);
    return out;
  }

  // Rows equal and from the same store snapshot; the timestamp is ignored.
  friend bool operator==(const ExpandedDataset& a, const ExpandedDataset& b) {
    return a.table == b.table && a.merged == b.merged && a.rows == b.rows &&
           a.provenance.store_hash == b.provenance.store_hash;
  }
};

namespace detail {

inline std::string utc_now() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline ExpandedDataset expand_by_subject(const Store& store, EntityKind subject_kind, AnnotationTable table) {
  ExpandedDataset ds;
  ds.table = table;
  ds.provenance = {store.content_hash(), utc_now()};
  std::map<EntityId, std::set<EntityId>> holders;  // subject -> historians
  for (const EntityId& h : store.entities_of_kind(EntityKind::historian))
    for (const EntityId& s : store.objects_of(h, Predicate::subject, subject_kind)) holders[s].insert(h);
  for (const auto& [subject, hs] : holders) {
    for (auto a = hs.begin(); a != hs.end(); ++a)
      for (auto b = std::next(a); b != hs.end(); ++b)
        ds.rows.push_back({EntityPair{*a, *b}, subject, table, std::nullopt, {}});
  }
  std::sort(ds.rows.begin(), ds.rows.end(),
            [](const PairRow& x, const PairRow& y) { return x.sort_key() < y.sort_key(); });
  return ds;
}

}  // namespace detail

inline ExpandedDataset expand_topic_pairs(const Store& store) {
  return detail::expand_by_subject(store, EntityKind::topic, AnnotationTable::artists_periods);
}

inline ExpandedDataset expand_institution_pairs(const Store& store) {
  return detail::expand_by_subject(store, EntityKind::institution, AnnotationTable::institutions);
}

// Topic rows whose pair also shares an institution. Row count counts topic rows.
inline ExpandedDataset merge_tables(const ExpandedDataset& topics, const ExpandedDataset& insts) {
  if (topics.provenance.store_hash != insts.provenance.store_hash)
    throw Error(ErrorCode::provenance, "datasets were expanded from different store snapshots");
  if (topics.table != AnnotationTable::artists_periods || insts.table != AnnotationTable::institutions)
    throw Error(ErrorCode::parameter, "merge_tables expects (artists_periods, institutions)");
  auto inst_pairs = insts.unique_pairs();
  ExpandedDataset out;
  out.table = AnnotationTable::artists_periods;
  out.merged = true;
  out.provenance = topics.provenance;
  for (const auto& r : topics.rows)
    if (inst_pairs.count(r.pair)) out.rows.push_back(r);
  return out;
}

using PairFlagMap = std::map<EntityPair, DerivedFlags>;

enum class FlagSource { annotation, mentions };

struct FlagOptions {
  FlagSource source = FlagSource::annotation;
  const MentionTable* mentions = nullptr;    // fallback, or the primary source in mentions mode
  const PairFlagMap* pair_flags = nullptr;   // pair-level fallback (e.g. from the topic table)
};

inline DerivedFlags flags_from_annotation(const AnnotationRecord& r) {
  DerivedFlags f;
  f.bio_one = is_one(r.recorded_in_one_bio);
  f.bio_both = is_one(r.recorded_in_both_bios);
  f.arch_a = is_one(r.h2_mentioned_in_h1_archive);
  f.arch_b = is_one(r.h1_mentioned_in_h2_archive);
  f.materials_a = is_one(r.h2_relevant_to_h1_archive);
  f.materials_b = is_one(r.h1_relevant_to_h2_archive);
  return f;
}

inline DerivedFlags flags_from_mentions(const MentionTable& m, const EntityPair& p) {
  DerivedFlags f;
  f.bio_one = m.mention_flag(p.first, p.second, MentionScope::bio_one);
  f.bio_both = m.mention_flag(p.first, p.second, MentionScope::bio_both);
  f.arch_a = m.mention_flag(p.first, p.second, MentionScope::archive_of_a);
  f.arch_b = m.mention_flag(p.first, p.second, MentionScope::archive_of_b);
  return f;
}

// OR of row flags per pair.
inline PairFlagMap pair_flags(const ExpandedDataset& ds) {
  PairFlagMap out;
  for (const auto& r : ds.rows) out[r.pair] |= r.flags;
  return out;
}

struct AttachResult {
  ExpandedDataset dataset;
  std::vector<AnnotationRecord> orphans;  // records matching no row
};

inline DerivedFlags resolve_flags(const PairRow& row, const FlagOptions& opt) {
  bool has_columns = row.annotation && row.annotation->recorded_in_one_bio.has_value();
  DerivedFlags f;
  if (opt.source == FlagSource::mentions) {
    if (!opt.mentions) throw Error(ErrorCode::configuration, "mention flags requested without a mention table");
    f = flags_from_mentions(*opt.mentions, row.pair);
  } else if (has_columns) {
    return flags_from_annotation(*row.annotation);
  } else if (opt.pair_flags && opt.pair_flags->count(row.pair)) {
    f = opt.pair_flags->at(row.pair);
  } else if (opt.mentions) {
    f = flags_from_mentions(*opt.mentions, row.pair);
  }
  if (has_columns) {
    f.materials_a = is_one(row.annotation->h2_relevant_to_h1_archive);
    f.materials_b = is_one(row.annotation->h1_relevant_to_h2_archive);
  }
  return f;
}

// Joins annotation records onto rows by (unordered pair, shared subject) and
// recomputes derived flags.
inline AttachResult attach_annotations(const ExpandedDataset& dataset, const std::vector<AnnotationRecord>& records,
                                       const FlagOptions& options = {}) {
  std::map<std::pair<EntityPair, EntityId>, AnnotationRecord> by_key;
  for (const auto& r : records) {
    if (r.table != dataset.table)
      throw Error(ErrorCode::schema, "annotation table " + std::string(to_string(r.table)) +
                                         " does not match dataset " + dataset.name());
    EntityPair p = canonical_pair(r.art_hist_1, r.art_hist_2);
    AnnotationRecord oriented = r.art_hist_1 == p.first ? r : r.flipped();
    auto [it, inserted] = by_key.try_emplace({p, r.shared_subject}, oriented);
    if (!inserted && !(it->second == oriented))
      throw Error(ErrorCode::conflict, "conflicting annotations for (" + p.first.str() + ", " + p.second.str() +
                                           ", " + r.shared_subject.str() + ")");
  }
  AttachResult out{dataset, {}};
  std::set<std::pair<EntityPair, EntityId>> used;
  for (auto& row : out.dataset.rows) {
    auto key = std::make_pair(row.pair, row.shared_subject);
    auto it = by_key.find(key);
    if (it != by_key.end()) {
      row.annotation = it->second;
      used.insert(key);
    } else {
      row.annotation.reset();
    }
    row.flags = resolve_flags(row, options);
  }
  for (const auto& [key, rec] : by_key)
    if (!used.count(key)) out.orphans.push_back(rec);
  return out;
}

// Same columns as the annotation CSVs; unannotated rows carry their derived flags in the mention
// columns and leave manual columns blank.
inline void write_dataset(std::ostream& out, const ExpandedDataset& ds) {
  csv::write_row(out, annotation_header(ds.table));
  auto bit = [](bool b) { return std::string(b ? "1" : "0"); };
  for (const auto& r : ds.rows) {
    if (r.annotation) {
      csv::write_row(out, annotation_row(*r.annotation));
    } else if (ds.table == AnnotationTable::artists_periods) {
      csv::write_row(out, {r.pair.first.str(), r.pair.second.str(), r.shared_subject.str(), "",
                           bit(r.flags.bio_one), bit(r.flags.bio_both), "", "", bit(r.flags.arch_a), "",
                           bit(r.flags.arch_b)});
    } else {
      csv::write_row(out, {r.pair.first.str(), r.pair.second.str(), r.shared_subject.str(), "", ""});
    }
  }
}

}  // namespace relrec
