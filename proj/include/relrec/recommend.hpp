#pragma once
// Rule- and model-sourced recommendations. Rules fire on mention and archive
// flags with score 1.0 and shadow any model output for the same relation.

#include <algorithm>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "relrec/classifiers.hpp"
#include "relrec/decisions.hpp"
#include "relrec/evaluation.hpp"
#include "relrec/features.hpp"
#include "relrec/mentions.hpp"

namespace relrec {

enum class RuleId { R1_bio_mention, R2_arch_mention, R3_materials };

inline std::string_view to_string(RuleId r) {
  switch (r) {
    case RuleId::R1_bio_mention: return "R1_bio_mention";
    case RuleId::R2_arch_mention: return "R2_arch_mention";
    case RuleId::R3_materials: return "R3_materials";
  }
  return "R1_bio_mention";
}

enum class EvidenceType { bio_mention, arch_mention, archive_relevance, shared_topic, shared_institution };

inline std::string_view to_string(EvidenceType t) {
  switch (t) {
    case EvidenceType::bio_mention: return "bio_mention";
    case EvidenceType::arch_mention: return "arch_mention";
    case EvidenceType::archive_relevance: return "archive_relevance";
    case EvidenceType::shared_topic: return "shared_topic";
    case EvidenceType::shared_institution: return "shared_institution";
  }
  return "bio_mention";
}

struct Evidence {
  EvidenceType type = EvidenceType::shared_topic;
  EntityId entity;                 // the mentioned or shared entity
  std::optional<EntityId> host;    // text owner for mentions
  std::optional<std::size_t> start;
  std::optional<std::size_t> end;

  friend auto operator<=>(const Evidence&, const Evidence&) = default;
  friend bool operator==(const Evidence&, const Evidence&) = default;
};

struct RecSource {
  std::optional<RuleId> rule;
  std::optional<ModelKind> model;
  std::string spec;

  bool is_rule() const { return rule.has_value(); }
};

enum class RecStatus { pending, accepted, rejected };

inline std::string_view to_string(RecStatus s) {
  switch (s) {
    case RecStatus::pending: return "pending";
    case RecStatus::accepted: return "accepted";
    case RecStatus::rejected: return "rejected";
  }
  return "pending";
}

struct Recommendation {
  RecRef ref;
  double score = 1.0;
  RecSource source;
  bool known = false;
  EntityPair basis;  // historian pair the recommendation was derived from
  std::vector<Evidence> evidence;
  RecStatus status = RecStatus::pending;
};

inline nlohmann::json to_json(const Evidence& e) {
  nlohmann::json j{{"type", to_string(e.type)}, {"entity", e.entity.str()}};
  if (e.host) j["host"] = e.host->str();
  if (e.start) j["span"] = {*e.start, *e.end};
  return j;
}

inline nlohmann::json to_json(const Recommendation& r) {
  nlohmann::json src;
  if (r.source.rule) src["rule"] = to_string(*r.source.rule);
  if (r.source.model) {
    src["model"] = to_string(*r.source.model);
    src["spec"] = r.source.spec;
  }
  nlohmann::json ev = nlohmann::json::array();
  for (const auto& e : r.evidence) ev.push_back(to_json(e));
  return {{"pair", {r.ref.subject.str(), r.ref.object.str()}},
          {"predicate", to_string(r.ref.predicate)},
          {"score", r.score},
          {"source", src},
          {"known", r.known},
          {"basis", {r.basis.first.str(), r.basis.second.str()}},
          {"evidence", ev},
          {"status", to_string(r.status)}};
}

inline void write_recommendations(std::ostream& out, const std::vector<Recommendation>& recs) {
  for (const auto& r : recs) out << to_json(r).dump() << '\n';
}

namespace detail {

inline void add_shared(std::vector<Evidence>& ev, const PairSummary& s) {
  for (const auto& t : s.shared_topics) ev.push_back({EvidenceType::shared_topic, t, {}, {}, {}});
  for (const auto& i : s.shared_institutions) ev.push_back({EvidenceType::shared_institution, i, {}, {}, {}});
}

// Mentions of `target` in `host`'s text of the given field, as evidence.
inline void add_mentions(std::vector<Evidence>& ev, const MentionTable* m, const EntityId& host, TextField field,
                         const EntityId& target, EvidenceType type) {
  if (!m) return;
  for (const auto& x : m->mentions_in(host))
    if (x.field == field && x.entity_id == target) ev.push_back({type, target, host, x.start, x.end});
}

inline void bio_evidence(std::vector<Evidence>& ev, const PairSummary& s, const MentionTable* m) {
  auto before = ev.size();
  add_mentions(ev, m, s.pair.first, TextField::biography, s.pair.second, EvidenceType::bio_mention);
  add_mentions(ev, m, s.pair.second, TextField::biography, s.pair.first, EvidenceType::bio_mention);
  // Flag came from the annotation columns without a located span.
  if (ev.size() == before) ev.push_back({EvidenceType::bio_mention, s.pair.second, s.pair.first, {}, {}});
}

inline void normalize_evidence(std::vector<Evidence>& ev) {
  std::sort(ev.begin(), ev.end());
  ev.erase(std::unique(ev.begin(), ev.end()), ev.end());
}

// Collections whose description mentions `target`, or every collection of
// `owner` when the flag is not backed by a located mention.
inline std::vector<EntityId> mentioning_archives(const Store* store, const MentionTable* m, const EntityId& owner,
                                                 const EntityId& target) {
  std::vector<EntityId> out;
  if (m) out = m->archives_mentioning(owner, target);
  if (out.empty() && store)
    for (const auto& c : store->collections_of(owner)) out.push_back(c);
  return out;
}

class RecBuilder {
 public:
  void add(Recommendation r) {
    auto it = index_.find(r.ref);
    if (it == index_.end()) {
      index_[r.ref] = out_.size();
      out_.push_back(std::move(r));
      return;
    }
    auto& dst = out_[it->second].evidence;
    dst.insert(dst.end(), r.evidence.begin(), r.evidence.end());
  }

  std::vector<Recommendation> take() {
    for (auto& r : out_) normalize_evidence(r.evidence);
    return std::move(out_);
  }

 private:
  std::map<RecRef, std::size_t> index_;
  std::vector<Recommendation> out_;
};

}  // namespace detail

// R1: a biography mention; R2: an archive mention, which also yields the
// directed collection-to-historian link; R3: archive relevance (A8/A10).
// Deduplicated by relation with evidence merged; the first firing rule names
// the source.
inline std::vector<Recommendation> apply_rules(const PairSummaries& pairs, const Store* store = nullptr,
                                               const MentionTable* mentions = nullptr) {
  detail::RecBuilder b;
  for (const auto& [pair, s] : pairs) {
    const auto& f = s.flags;
    RecRef rel = RecRef::make(pair.first, pair.second, Predicate::interacted_with);
    auto make = [&](RuleId rule, RecRef ref) {
      Recommendation r{std::move(ref), 1.0, {rule, std::nullopt, {}}, f.bio_one, pair, {}, RecStatus::pending};
      detail::add_shared(r.evidence, s);
      return r;
    };
    if (f.bio_one) {
      auto r = make(RuleId::R1_bio_mention, rel);
      detail::bio_evidence(r.evidence, s, mentions);
      b.add(std::move(r));
    }
    if (f.arch_any()) {
      auto r = make(RuleId::R2_arch_mention, rel);
      std::vector<Recommendation> directed;
      auto side = [&](bool on, const EntityId& owner, const EntityId& target) {
        if (!on) return;
        bool hosted = false;
        for (const auto& c : detail::mentioning_archives(store, mentions, owner, target)) {
          Evidence e{EvidenceType::arch_mention, target, c, {}, {}};
          std::vector<Evidence> located;
          detail::add_mentions(located, mentions, c, TextField::description, target, EvidenceType::arch_mention);
          if (located.empty()) located.push_back(e);
          r.evidence.insert(r.evidence.end(), located.begin(), located.end());
          auto d = make(RuleId::R2_arch_mention,
                        RecRef::make(c, target, Predicate::includes_materials_relevant_to));
          d.evidence.insert(d.evidence.end(), located.begin(), located.end());
          directed.push_back(std::move(d));
          hosted = true;
        }
        if (!hosted) r.evidence.push_back({EvidenceType::arch_mention, target, owner, {}, {}});
      };
      side(f.arch_a, pair.first, pair.second);
      side(f.arch_b, pair.second, pair.first);
      b.add(std::move(r));
      for (auto& d : directed) b.add(std::move(d));
    }
    if (f.materials_any()) {
      auto r = make(RuleId::R3_materials, rel);
      if (f.materials_a) r.evidence.push_back({EvidenceType::archive_relevance, pair.second, pair.first, {}, {}});
      if (f.materials_b) r.evidence.push_back({EvidenceType::archive_relevance, pair.first, pair.second, {}, {}});
      b.add(std::move(r));
    }
  }
  return b.take();
}

// Model recommendations for pairs predicted positive. Historian units emit
// interacted_with; collection units emit is_related_to between every pair of
// collections of the two historians. Relations already proposed by a rule
// are skipped.
inline std::vector<Recommendation> score_candidates(const TrainedModel& model, const PairSummaries& pairs, Unit unit,
                                                    std::string_view spec,
                                                    const std::vector<Recommendation>& rule_recs,
                                                    const Store* store = nullptr,
                                                    const MentionTable* mentions = nullptr) {
  if (model.unit != unit)
    throw Error(ErrorCode::configuration, "model trained for " + std::string(to_string(model.unit)) +
                                              ", asked to score " + std::string(to_string(unit)));
  if (model.spec.name != spec)
    throw Error(ErrorCode::configuration, "model trained on spec " + model.spec.name + ", asked to score " +
                                              std::string(spec));
  if (unit == Unit::collection_pair && !store)
    throw Error(ErrorCode::configuration, "collection recommendations need the store");
  std::set<RecRef> shadowed;
  for (const auto& r : rule_recs) shadowed.insert(r.ref);
  detail::RecBuilder b;
  for (const auto& [pair, s] : pairs) {
    if (!in_universe(s, model.spec, unit)) continue;
    auto pred = predict(model, feature_vector(s, model.spec));
    if (pred.label != 1) continue;
    std::vector<Evidence> ev;
    detail::add_shared(ev, s);
    if (s.flags.bio_one || ev.empty()) detail::bio_evidence(ev, s, mentions);
    auto emit = [&](RecRef ref) {
      if (shadowed.count(ref)) return;
      b.add({std::move(ref), pred.score, {std::nullopt, model.kind, model.spec.name}, s.flags.bio_one, pair, ev,
             RecStatus::pending});
    };
    if (unit == Unit::historian_pair) {
      emit(RecRef::make(pair.first, pair.second, Predicate::interacted_with));
    } else {
      for (const auto& ca : store->collections_of(pair.first))
        for (const auto& cb : store->collections_of(pair.second))
          if (ca != cb) emit(RecRef::make(ca, cb, Predicate::is_related_to));
    }
  }
  return b.take();
}

// Score descending, then relation ascending.
inline void rank(std::vector<Recommendation>& recs) {
  std::stable_sort(recs.begin(), recs.end(), [](const Recommendation& a, const Recommendation& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.ref < b.ref;
  });
}

struct KnownShare {
  std::size_t known = 0;
  std::size_t unknown = 0;
  std::optional<int> known_pct;  // absent when there is nothing to split
  std::optional<int> unknown_pct;
};

// Percentages sum to 100; an exact half rounds in favor of known.
inline KnownShare known_share(std::size_t known, std::size_t unknown) {
  KnownShare s{known, unknown, {}, {}};
  std::size_t n = known + unknown;
  if (n == 0) return s;
  s.known_pct = static_cast<int>((200 * known + n) / (2 * n));
  s.unknown_pct = 100 - *s.known_pct;
  return s;
}

inline nlohmann::json to_json(const KnownShare& s) {
  auto pct = [](const std::optional<int>& v) { return v ? nlohmann::json(*v) : nlohmann::json("n/a"); };
  return {{"known", s.known}, {"unknown", s.unknown}, {"known_pct", pct(s.known_pct)},
          {"unknown_pct", pct(s.unknown_pct)}};
}

struct KnownUnknown {
  KnownShare share;
  std::vector<Recommendation> known;
  std::vector<Recommendation> unknown;
};

inline KnownUnknown partition_known_unknown(const std::vector<Recommendation>& recs) {
  KnownUnknown out;
  for (const auto& r : recs) (r.known ? out.known : out.unknown).push_back(r);
  out.share = known_share(out.known.size(), out.unknown.size());
  return out;
}

// Known/unknown split of the out-of-fold positive predictions.
inline KnownShare cv_known_share(const CvResult& cv, const LabeledDataset& data) {
  std::size_t known = 0, unknown = 0;
  for (const auto& p : cv.predictions) {
    if (p.label != 1) continue;
    (data.rows.at(p.row).flags.bio_one ? known : unknown)++;
  }
  return known_share(known, unknown);
}

struct RecommendContext {
  const Store* store = nullptr;
  const PairSummaries* pairs = nullptr;
  const MentionTable* mentions = nullptr;
  const TrainedModel* historian_model = nullptr;
  const TrainedModel* collection_model = nullptr;
  const DecisionLog* decisions = nullptr;
};

inline std::vector<Recommendation> recommend_for_entity(const RecommendContext& ctx, const EntityId& entity,
                                                        std::optional<std::size_t> limit = std::nullopt) {
  if (!ctx.store || !ctx.pairs) throw Error(ErrorCode::configuration, "recommendation context is incomplete");
  const Store& store = *ctx.store;
  const Entity* e = store.find(entity);
  if (!e || (e->kind != EntityKind::historian && e->kind != EntityKind::collection))
    throw Error(ErrorCode::not_found, "no historian or collection " + entity.str());

  std::set<EntityId> people;
  if (e->kind == EntityKind::historian)
    people.insert(entity);
  else
    people = store.producers_of(entity);

  PairSummaries involved;
  for (const auto& [pair, s] : *ctx.pairs)
    if (people.count(pair.first) || people.count(pair.second)) involved.emplace(pair, s);

  auto recs = apply_rules(involved, &store, ctx.mentions);
  std::vector<Recommendation> model_recs;
  for (const auto* m : {ctx.historian_model, ctx.collection_model}) {
    if (!m) continue;
    auto more = score_candidates(*m, involved, m->unit, m->spec.name, recs, &store, ctx.mentions);
    model_recs.insert(model_recs.end(), more.begin(), more.end());
  }
  recs.insert(recs.end(), model_recs.begin(), model_recs.end());

  std::vector<Recommendation> out;
  for (auto& r : recs) {
    if (e->kind == EntityKind::collection && r.ref.subject != entity && r.ref.object != entity) continue;
    if (store.linked(r.ref.subject, r.ref.predicate, r.ref.object)) continue;
    if (ctx.decisions) {
      auto v = ctx.decisions->verdict(r.ref);
      if (v == Verdict::accept) continue;
      if (v == Verdict::reject) r.status = RecStatus::rejected;
    }
    out.push_back(std::move(r));
  }
  rank(out);
  if (limit && out.size() > *limit) out.erase(out.begin() + static_cast<std::ptrdiff_t>(*limit), out.end());
  return out;
}

}  // namespace relrec
