#include <gtest/gtest.h>

#include "properties.hpp"

using namespace relrec;
using namespace relrec::testing;

namespace {

struct Prepared {
  Store store;
  MentionTable mentions;
  ExpandedDataset topics;
  ExpandedDataset insts;
  PairSummaries pairs;
};

// Unannotated tables with flags taken from the mention detector.
Prepared prepare(Store s) {
  Prepared p{std::move(s), {}, {}, {}, {}};
  p.mentions = MentionTable(p.store, build_alias_index(p.store));
  p.topics = attach_annotations(expand_topic_pairs(p.store), {}, {FlagSource::mentions, &p.mentions, nullptr}).dataset;
  p.insts = attach_annotations(expand_institution_pairs(p.store), {}, {FlagSource::mentions, &p.mentions, nullptr})
                .dataset;
  p.pairs = summarize_pairs(&p.topics, &p.insts);
  return p;
}

// A logistic model whose score is the same constant for every input.
TrainedModel constant_model(double score, const std::string& spec, Unit unit = Unit::historian_pair) {
  LrParams lr;
  lr.weights.assign(feature_spec(spec).features.size(), 0.0);
  lr.intercept = std::log(score / (1 - score));
  return {ModelKind::lr, feature_spec(spec), unit, 0, lr};
}

bool in_graph(const Store& s, const std::string& a, Predicate p, const std::string& b, const std::string& graph) {
  for (const auto& st : s.statements())
    if (st.subject.str() == a && st.predicate == p && st.object.str() == b && st.graph == graph) return true;
  return false;
}

const Recommendation* find_rec(const std::vector<Recommendation>& recs, const std::string& s, const std::string& o,
                               Predicate p) {
  auto ref = RecRef::make(EntityId(s), EntityId(o), p);
  for (const auto& r : recs)
    if (r.ref == ref) return &r;
  return nullptr;
}

}  // namespace

TEST(RulesTest, BiographyMentionFiresR1) {
  auto p = prepare(fixture_f1());
  auto recs = apply_rules(p.pairs, &p.store, &p.mentions);
  ASSERT_EQ(recs.size(), 1u);
  const auto& r = recs[0];
  EXPECT_EQ(r.ref, RecRef::make(EntityId("H1"), EntityId("H2"), Predicate::interacted_with));
  EXPECT_EQ(r.score, 1.0);
  EXPECT_EQ(r.source.rule, RuleId::R1_bio_mention);
  EXPECT_TRUE(r.known);
  // The located mention of "Carlo Rossi" in H1's biography is part of the evidence.
  const auto* bio = p.store.text(EntityId("H1"), TextField::biography);
  bool span_found = false;
  for (const auto& e : r.evidence)
    if (e.type == EvidenceType::bio_mention && e.start) {
      span_found = true;
      EXPECT_EQ(bio->text.substr(*e.start, *e.end - *e.start), "Carlo Rossi");
      EXPECT_EQ(e.host->str(), "H1");
    }
  EXPECT_TRUE(span_found);
}

TEST(RulesTest, NoFlagsNoRecommendations) {
  Store s = fixture_f1();
  s.set_text({EntityId("H1"), TextField::biography, "Nothing relevant here."});
  auto p = prepare(s);
  EXPECT_TRUE(apply_rules(p.pairs, &p.store, &p.mentions).empty());
}

TEST(RulesTest, ArchiveMentionIsDirectedFromTheHostCollection) {
  Store s = fixture_f1();
  s.set_text({EntityId("H1"), TextField::biography, "Nothing relevant here."});
  s.set_text({EntityId("C1"), TextField::description, "Correspondence with Carlo Rossi, 1950-1960."});
  auto p = prepare(s);
  auto recs = apply_rules(p.pairs, &p.store, &p.mentions);
  const auto* directed = find_rec(recs, "C1", "H2", Predicate::includes_materials_relevant_to);
  ASSERT_NE(directed, nullptr);
  EXPECT_EQ(directed->ref.subject.str(), "C1");
  EXPECT_EQ(directed->ref.object.str(), "H2");
  EXPECT_EQ(directed->source.rule, RuleId::R2_arch_mention);
  EXPECT_FALSE(directed->known);
  EXPECT_EQ(find_rec(recs, "H2", "C1", Predicate::includes_materials_relevant_to), nullptr);
  EXPECT_EQ(find_rec(recs, "C2", "H1", Predicate::includes_materials_relevant_to), nullptr);
  ASSERT_NE(find_rec(recs, "H1", "H2", Predicate::interacted_with), nullptr);
  EXPECT_EQ(recs.size(), 2u);
}

TEST(RulesTest, MaterialsFlagFiresR3AndRulesDeduplicate) {
  Store s = fixture_f1();
  auto ann = topic_annotation("H1", "H2", "T1", Label::one, Label::one);
  ann.h1_relevant_to_h2_archive = Label::one;
  auto topics = attach_annotations(expand_topic_pairs(s), {ann}).dataset;
  auto pairs = summarize_pairs(&topics, nullptr);
  auto recs = apply_rules(pairs, &s, nullptr);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].source.rule, RuleId::R1_bio_mention);
  bool relevance = false;
  for (const auto& e : recs[0].evidence) relevance |= e.type == EvidenceType::archive_relevance;
  EXPECT_TRUE(relevance);

  ann.recorded_in_one_bio = Label::zero;
  topics = attach_annotations(expand_topic_pairs(s), {ann}).dataset;
  recs = apply_rules(summarize_pairs(&topics, nullptr), &s, nullptr);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].source.rule, RuleId::R3_materials);
  EXPECT_FALSE(recs[0].known);
}

TEST(RulesProperty, AlwaysScoreOneWithEvidence) {
  std::mt19937_64 rng(17);
  std::bernoulli_distribution coin(0.3);
  for (int t = 0; t < 100; ++t) {
    auto rs = random_store(rng, 8);
    auto topics = expand_topic_pairs(rs.store);
    for (auto& row : topics.rows) {
      row.flags.bio_one = coin(rng);
      row.flags.arch_a = coin(rng);
      row.flags.materials_b = coin(rng);
    }
    auto pairs = summarize_pairs(&topics, nullptr);
    auto recs = apply_rules(pairs, &rs.store, nullptr);
    std::set<RecRef> seen;
    for (const auto& r : recs) {
      EXPECT_EQ(r.score, 1.0);
      EXPECT_FALSE(r.evidence.empty());
      EXPECT_TRUE(seen.insert(r.ref).second) << "duplicate relation";
      EXPECT_EQ(r.known, pairs.at(r.basis).flags.bio_one);
    }
    // Exactly the flagged pairs get an interacted_with recommendation.
    for (const auto& [pair, s] : pairs) {
      bool want = s.flags.bio_one || s.flags.arch_any() || s.flags.materials_any();
      EXPECT_EQ(seen.count(RecRef::make(pair.first, pair.second, Predicate::interacted_with)) == 1, want);
    }
  }
}

TEST(ScoreTest, PassesModelScoreThrough) {
  Store s = fixture_f1();
  s.set_text({EntityId("H1"), TextField::biography, "Nothing relevant here."});
  auto p = prepare(s);
  auto recs = score_candidates(constant_model(0.9, "topics"), p.pairs, Unit::historian_pair, "topics", {}, &p.store);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_NEAR(recs[0].score, 0.9, 1e-12);
  EXPECT_EQ(recs[0].source.model, ModelKind::lr);
  EXPECT_EQ(recs[0].source.spec, "topics");
  EXPECT_FALSE(recs[0].source.is_rule());
  EXPECT_TRUE(score_candidates(constant_model(0.4, "topics"), p.pairs, Unit::historian_pair, "topics", {}, &p.store)
                  .empty());
}

TEST(ScoreTest, RulesTakePrecedence) {
  auto p = prepare(fixture_f1());
  auto rules = apply_rules(p.pairs, &p.store, &p.mentions);
  auto model = score_candidates(constant_model(0.9, "topics"), p.pairs, Unit::historian_pair, "topics", rules,
                                &p.store);
  EXPECT_TRUE(model.empty());
  ASSERT_EQ(rules.size(), 1u);
  EXPECT_EQ(rules[0].score, 1.0);
}

TEST(ScoreTest, MismatchIsAConfigurationError) {
  auto p = prepare(fixture_f1());
  auto m = constant_model(0.9, "topics");
  for (auto call : {std::function<void()>([&] { score_candidates(m, p.pairs, Unit::collection_pair, "topics", {},
                                                                  &p.store); }),
                    std::function<void()>([&] { score_candidates(m, p.pairs, Unit::historian_pair, "inst", {},
                                                                  &p.store); })}) {
    try {
      call();
      ADD_FAILURE() << "expected configuration error";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::configuration);
    }
  }
}

TEST(ScoreTest, CollectionUnitLinksCollections) {
  auto p = prepare(fixture_f1());
  auto recs = score_candidates(constant_model(0.8, "topics", Unit::collection_pair), p.pairs, Unit::collection_pair,
                               "topics", {}, &p.store);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].ref, RecRef::make(EntityId("C2"), EntityId("C1"), Predicate::is_related_to));
  EXPECT_TRUE(recs[0].known);
}

TEST(PartitionTest, SharesAndRounding) {
  auto share = known_share(1, 7);  // 12.5 rounds toward known
  EXPECT_EQ(share.known_pct, 13);
  EXPECT_EQ(share.unknown_pct, 87);
  EXPECT_EQ(known_share(3, 0).known_pct, 100);
  EXPECT_EQ(known_share(0, 5).unknown_pct, 100);
  auto none = known_share(0, 0);
  EXPECT_FALSE(none.known_pct);
  EXPECT_EQ(to_json(none)["known_pct"], "n/a");
  for (std::size_t k = 0; k <= 40; ++k)
    for (std::size_t u = 0; u <= 40; ++u)
      if (k + u) {
        EXPECT_EQ(*known_share(k, u).known_pct + *known_share(k, u).unknown_pct, 100);
      }
}

TEST(PartitionTest, SplitsByBiographyFlag) {
  Store s = fixture_f1();
  s.set_text({EntityId("H1"), TextField::biography, "Nothing relevant here."});
  auto p = prepare(s);
  auto recs = score_candidates(constant_model(0.9, "topics"), p.pairs, Unit::historian_pair, "topics", {}, &p.store);
  auto parts = partition_known_unknown(recs);
  EXPECT_EQ(parts.share.known_pct, 0);
  EXPECT_EQ(parts.share.unknown_pct, 100);
  EXPECT_EQ(parts.unknown.size(), 1u);
  EXPECT_FALSE(partition_known_unknown({}).share.known_pct);
}

namespace {

// F1 plus H4, who shares T1, T3 and I1 with H1 and has no texts.
Store fixture_with_newcomer() {
  Store s = fixture_f1();
  put(s, "H4", EntityKind::historian, "Elena Neri");
  put(s, "T3", EntityKind::topic, "Venetian drawing");
  link(s, "H1", Predicate::subject, "T3");
  link(s, "H4", Predicate::subject, "T1");
  link(s, "H4", Predicate::subject, "T3");
  link(s, "H4", Predicate::subject, "I1");
  return s;
}

// Positive exactly when at least one institution and two topics are shared.
TrainedModel threshold_model() {
  LabeledDataset d{Unit::historian_pair, feature_spec("inst+topics"), {}};
  int i = 0;
  for (double ni : {0.0, 1.0})
    for (double nt : {1.0, 2.0, 3.0})
      for (int rep = 0; rep < 3; ++rep, ++i)
        d.rows.push_back({{EntityId("A" + std::to_string(i)), EntityId("B" + std::to_string(i))},
                          {ni, nt},
                          ni >= 1 && nt >= 2 ? 1 : 0,
                          {}});
  return train_dt(d);
}

}  // namespace

TEST(RecommendForEntityTest, NewcomerGetsModelRecommendationWithSharedEvidence) {
  auto p = prepare(fixture_with_newcomer());
  auto model = threshold_model();
  RecommendContext ctx{&p.store, &p.pairs, &p.mentions, &model, nullptr, nullptr};
  auto recs = recommend_for_entity(ctx, EntityId("H4"));
  const auto* r = find_rec(recs, "H1", "H4", Predicate::interacted_with);
  ASSERT_NE(r, nullptr);
  EXPECT_EQ(r->source.model, ModelKind::dt);
  EXPECT_DOUBLE_EQ(r->score, 1.0);
  std::set<std::pair<EvidenceType, std::string>> ev;
  for (const auto& e : r->evidence) ev.insert({e.type, e.entity.str()});
  EXPECT_EQ(ev, (std::set<std::pair<EvidenceType, std::string>>{{EvidenceType::shared_topic, "T1"},
                                                                 {EvidenceType::shared_topic, "T3"},
                                                                 {EvidenceType::shared_institution, "I1"}}));
  EXPECT_EQ(find_rec(recs, "H2", "H4", Predicate::interacted_with), nullptr);
  EXPECT_EQ(find_rec(recs, "H1", "H2", Predicate::interacted_with), nullptr);  // not about H4
}

TEST(RecommendForEntityTest, IsolatedEntityAndUnknownIds) {
  auto p = prepare(fixture_f1());
  RecommendContext ctx{&p.store, &p.pairs, &p.mentions, nullptr, nullptr, nullptr};
  EXPECT_TRUE(recommend_for_entity(ctx, EntityId("H3")).empty());
  for (const char* id : {"H99", "T1"}) {
    try {
      recommend_for_entity(ctx, EntityId(id));
      ADD_FAILURE() << id;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::not_found);
    }
  }
}

TEST(RecommendForEntityTest, FiltersRecordedRelationsAndDecisions) {
  Store s = fixture_f1();
  link(s, "H2", Predicate::interacted_with, "H1");
  auto p = prepare(s);
  RecommendContext ctx{&p.store, &p.pairs, &p.mentions, nullptr, nullptr, nullptr};
  EXPECT_TRUE(recommend_for_entity(ctx, EntityId("H1")).empty());

  auto q = prepare(fixture_f1());
  DecisionLog log;
  ctx = {&q.store, &q.pairs, &q.mentions, nullptr, nullptr, &log};
  ASSERT_EQ(recommend_for_entity(ctx, EntityId("H1")).size(), 1u);
  auto ref = RecRef::make(EntityId("H1"), EntityId("H2"), Predicate::interacted_with);
  record_decision(q.store, log, {ref, Verdict::reject, "ann", "t1", "r1"});
  auto recs = recommend_for_entity(ctx, EntityId("H1"));
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].status, RecStatus::rejected);
  record_decision(q.store, log, {ref, Verdict::accept, "ann", "t2", "r2"});
  EXPECT_TRUE(recommend_for_entity(ctx, EntityId("H1")).empty());
}

TEST(RecommendForEntityTest, CollectionsSeeTheirOwnRelations) {
  Store s = fixture_f1();
  s.set_text({EntityId("C1"), TextField::description, "Correspondence with Carlo Rossi."});
  auto p = prepare(s);
  auto coll = constant_model(0.7, "bio", Unit::collection_pair);
  RecommendContext ctx{&p.store, &p.pairs, &p.mentions, nullptr, &coll, nullptr};
  auto recs = recommend_for_entity(ctx, EntityId("C1"));
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].ref.predicate, Predicate::includes_materials_relevant_to);
  EXPECT_EQ(recs[1].ref.predicate, Predicate::is_related_to);
  EXPECT_NEAR(recs[1].score, 0.7, 1e-12);
  EXPECT_TRUE(recommend_for_entity(ctx, EntityId("C3")).empty());
}

TEST(RankProperty, TotalAndDeterministicOrder) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> id(0, 30), sc(0, 4);
  for (int t = 0; t < 50; ++t) {
    std::vector<Recommendation> recs;
    std::set<RecRef> used;
    while (recs.size() < 25) {
      int a = id(rng), b = id(rng);
      if (a == b) continue;
      auto ref = RecRef::make(EntityId("X" + std::to_string(a)), EntityId("X" + std::to_string(b)),
                              Predicate::interacted_with);
      if (!used.insert(ref).second) continue;
      recs.push_back({ref, sc(rng) / 4.0, {}, false, {ref.subject, ref.object}, {}, RecStatus::pending});
    }
    auto x = recs, y = recs;
    std::shuffle(y.begin(), y.end(), rng);
    rank(x);
    rank(y);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i].ref, y[i].ref);
    for (std::size_t i = 1; i < x.size(); ++i)
      EXPECT_TRUE(x[i - 1].score > x[i].score || (x[i - 1].score == x[i].score && x[i - 1].ref < x[i].ref));
  }
}

TEST(DecisionTest, AcceptMaterializesAndRejectRemoves) {
  Store s = fixture_f1();
  DecisionLog log;
  auto ref = RecRef::make(EntityId("H2"), EntityId("H1"), Predicate::interacted_with);
  EXPECT_TRUE(record_decision(s, log, {ref, Verdict::accept, "ann", "t1", ""}));
  EXPECT_TRUE(in_graph(s, "H1", Predicate::interacted_with, "H2", "decisions"));
  auto st = s.statements();
  auto it = std::find_if(st.begin(), st.end(), [](const Statement& x) { return x.graph == "decisions"; });
  ASSERT_NE(it, st.end());
  EXPECT_EQ(it->source, StatementSource::decision);
  EXPECT_EQ(log.pair_labels().at(canonical_pair(EntityId("H1"), EntityId("H2"))), 1);

  EXPECT_TRUE(record_decision(s, log, {ref, Verdict::reject, "ann", "t2", ""}));
  EXPECT_FALSE(in_graph(s, "H1", Predicate::interacted_with, "H2", "decisions"));
  EXPECT_EQ(log.pair_labels().at(canonical_pair(EntityId("H1"), EntityId("H2"))), 0);
  EXPECT_EQ(log.entries().size(), 2u);
}

TEST(DecisionTest, DanglingReferencesAreNotFound) {
  Store s = fixture_f1();
  DecisionLog log;
  for (auto ref : {RecRef::make(EntityId("H1"), EntityId("H9"), Predicate::interacted_with),
                   RecRef::make(EntityId("H1"), EntityId("C1"), Predicate::interacted_with),
                   RecRef::make(EntityId("H1"), EntityId("C1"), Predicate::includes_materials_relevant_to)}) {
    try {
      record_decision(s, log, {ref, Verdict::accept, "ann", "t", ""});
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::not_found);
    }
  }
  EXPECT_TRUE(log.entries().empty());
}

TEST(DecisionTest, LogFileSurvivesReload) {
  auto dir = temp_dir("decisions");
  Store s = fixture_f1();
  auto ref = RecRef::make(EntityId("C1"), EntityId("H2"), Predicate::includes_materials_relevant_to);
  {
    DecisionLog log(dir / "log.jsonl");
    record_decision(s, log, {ref, Verdict::accept, "ann", "t1", "a"});
    EXPECT_FALSE(record_decision(s, log, {ref, Verdict::reject, "ann", "t2", "a"}));
  }
  DecisionLog again(dir / "log.jsonl");
  ASSERT_EQ(again.entries().size(), 1u);
  EXPECT_EQ(again.entries()[0].ref, ref);
  EXPECT_EQ(again.verdict(ref), Verdict::accept);
  std::ofstream(dir / "log.jsonl", std::ios::app) << "{not json\n";
  EXPECT_THROW(DecisionLog(dir / "log.jsonl"), Error);
  fs::remove_all(dir);
}

TEST(DecisionProperty, ReplayIsIdempotent) {
  auto r = check_replay_idempotence();
  EXPECT_TRUE(r.ok) << r.detail;
}
