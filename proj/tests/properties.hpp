#pragma once
// Randomized property checks with independent oracles. Shared by the unit
// suites and the acceptance runner.

#include <cmath>
#include <set>
#include <sstream>
#include <string>
#include <tuple>

#include "support.hpp"

namespace relrec::testing {

struct PropertyResult {
  std::string name;
  bool ok = true;
  std::string detail;
  std::size_t cases = 0;

  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

// Pair rows recomputed from the membership matrix, with string-ordered ids.
inline std::set<std::tuple<std::string, std::string, std::string>> oracle_rows(
    const std::vector<std::vector<bool>>& member, std::size_t n_subjects, std::string (*sid)(std::size_t)) {
  std::set<std::tuple<std::string, std::string, std::string>> out;
  for (std::size_t a = 0; a < member.size(); ++a)
    for (std::size_t b = 0; b < member.size(); ++b) {
      if (a == b) continue;
      for (std::size_t s = 0; s < n_subjects; ++s) {
        if (!member[a][s] || !member[b][s]) continue;
        auto x = hid(a), y = hid(b);
        if (y < x) std::swap(x, y);
        out.insert({x, y, sid(s)});
      }
    }
  return out;
}

inline PropertyResult check_expansion_oracle(std::size_t stores = 200, std::uint64_t seed = 1) {
  PropertyResult r{"expansion matches brute force", true, {}, 0};
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < stores; ++i) {
    auto rs = random_store(rng, 10);
    auto check = [&](const ExpandedDataset& ds, const auto& expect, const char* what) {
      std::set<std::tuple<std::string, std::string, std::string>> got;
      for (const auto& row : ds.rows) {
        if (!(row.pair.first < row.pair.second)) r.fail(std::string(what) + ": non-canonical pair");
        got.insert({row.pair.first.str(), row.pair.second.str(), row.shared_subject.str()});
      }
      if (got.size() != ds.rows.size()) r.fail(std::string(what) + ": duplicate rows in store " + std::to_string(i));
      if (got != expect) r.fail(std::string(what) + ": row set differs in store " + std::to_string(i));
    };
    check(expand_topic_pairs(rs.store), oracle_rows(rs.topic_of, rs.topics, &tid), "topics");
    check(expand_institution_pairs(rs.store), oracle_rows(rs.inst_of, rs.institutions, &iid), "institutions");
    ++r.cases;
  }
  return r;
}

inline Samples random_samples(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n(4, 30), d(1, 3), count(0, 6);
  std::bernoulli_distribution coin(0.5);
  Samples s;
  int dim = d(rng), rows = n(rng);
  for (int j = 0; j < dim; ++j) s.binary.push_back(coin(rng));
  for (int i = 0; i < rows; ++i) {
    std::vector<double> x;
    for (int j = 0; j < dim; ++j) x.push_back(s.binary[j] ? (coin(rng) ? 1.0 : 0.0) : double(count(rng)));
    s.x.push_back(x);
    s.y.push_back(coin(rng) ? 1 : 0);
  }
  s.y[0] = 0;
  s.y[1] = 1;
  return s;
}

inline PropertyResult check_lr_gradient(std::size_t trials = 200, std::uint64_t seed = 2) {
  PropertyResult r{"lr gradient matches central differences", true, {}, 0};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> w(0.0, 1.5);
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    auto s = random_samples(rng);
    double lambda = std::array{0.0, 0.5, 1.0, 3.0}[t % 4];
    std::vector<double> theta(s.dim() + 1);
    for (auto& v : theta) v = w(rng);
    auto g = lr_gradient(s, theta, lambda);
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double h = 1e-5;
      auto up = theta, down = theta;
      up[j] += h;
      down[j] -= h;
      double fd = (lr_objective(s, up, lambda) - lr_objective(s, down, lambda)) / (2 * h);
      double rel = std::abs(g[j] - fd) / std::max({1.0, std::abs(g[j]), std::abs(fd)});
      worst = std::max(worst, rel);
      if (rel > 1e-5) {
        std::ostringstream os;
        os << "trial " << t << " coordinate " << j << ": analytic " << g[j] << " vs numeric " << fd;
        r.fail(os.str());
      }
    }
    ++r.cases;
  }
  if (r.ok) r.detail = "worst relative error " + std::to_string(worst);
  return r;
}

inline PropertyResult check_nb_normalization(std::size_t trials = 200, std::uint64_t seed = 3) {
  PropertyResult r{"nb posterior sums to one", true, {}, 0};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> probe(-2.0, 12.0);
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    auto s = random_samples(rng);
    auto p = fit_nb(s, Hyperparams{});
    for (int q = 0; q < 10; ++q) {
      std::vector<double> x;
      for (std::size_t j = 0; j < s.dim(); ++j) x.push_back(s.binary[j] ? double(q % 2) : probe(rng));
      auto post = nb_posterior(p, x);
      double err = std::abs(post[0] + post[1] - 1.0);
      worst = std::max(worst, err);
      if (err > 1e-12 || post[0] < 0 || post[1] < 0) r.fail("trial " + std::to_string(t) + ": posterior off by " +
                                                            std::to_string(err));
    }
    ++r.cases;
  }
  if (r.ok) r.detail = "worst deviation " + std::to_string(worst);
  return r;
}

inline LabeledDataset random_dataset(std::mt19937_64& rng, std::size_t rows) {
  LabeledDataset d{Unit::historian_pair, feature_spec("topics+bio"), {}};
  std::uniform_int_distribution<int> topics(1, 5);
  std::bernoulli_distribution coin(0.35);
  for (std::size_t i = 0; i < rows; ++i) {
    double nt = topics(rng);
    bool bio = coin(rng);
    int y = bio || (nt >= 3 && coin(rng)) ? 1 : 0;
    EntityPair p{EntityId("A" + std::to_string(1000 + i)), EntityId("B" + std::to_string(1000 + i))};
    d.rows.push_back({p, {nt, bio ? 1.0 : 0.0}, y, {}});
  }
  d.rows[0].y = 0;
  d.rows[1].y = 1;
  return d;
}

// Re-derives every out-of-fold prediction by training on the complement,
// then recomputes the metric suite from plain counts.
inline PropertyResult check_metric_oracle(std::size_t trials = 30, std::uint64_t seed = 4) {
  PropertyResult r{"metrics match an independent recount", true, {}, 0};
  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    auto d = random_dataset(rng, 20 + t);
    const std::size_t k = 5;
    auto plan = stratified_kfold(d.labels(), k, seed + t);
    for (ModelKind kind : all_model_kinds) {
      CvResult cv;
      try {
        cv = cross_validate(kind, d, plan);
      } catch (const Error&) {
        continue;  // a training fold without both classes
      }
      double tp = 0, fp = 0, fn = 0, tn = 0, fold_p = 0;
      for (std::size_t f = 0; f < k; ++f) {
        std::vector<std::size_t> tr, te;
        for (std::size_t i = 0; i < d.rows.size(); ++i) (plan.assignment[i] == f ? te : tr).push_back(i);
        auto m = train(kind, to_samples(d, tr), d.spec, d.unit, {}, plan.seed);
        double ftp = 0, ffp = 0;
        for (std::size_t i : te) {
          int yhat = predict(m, d.rows[i].x).label;
          const auto& logged = cv.predictions[i];
          if (logged.row != i || logged.fold != f || logged.label != yhat) r.fail("prediction log mismatch");
          int y = d.rows[i].y;
          tp += y == 1 && yhat == 1;
          fp += y == 0 && yhat == 1;
          fn += y == 1 && yhat == 0;
          tn += y == 0 && yhat == 0;
          ftp += y == 1 && yhat == 1;
          ffp += y == 0 && yhat == 1;
        }
        fold_p += ftp + ffp > 0 ? ftp / (ftp + ffp) : 0.0;
      }
      auto near = [](double a, double b) { return std::abs(a - b) <= 1e-12; };
      double p1 = tp + fp > 0 ? tp / (tp + fp) : 0.0;
      double r1 = tp + fn > 0 ? tp / (tp + fn) : 0.0;
      double a = (tp + tn) / double(d.rows.size());
      if (!near(cv.metrics.p1, p1) || !near(cv.metrics.r1, r1) || !near(cv.metrics.a, a) ||
          !near(cv.metrics.p, fold_p / k))
        r.fail("trial " + std::to_string(t) + " " + std::string(to_string(kind)) + ": metric mismatch");
      auto again = metrics_from_predictions(cv.predictions, k);
      if (!near(again.p1, cv.metrics.p1) || !near(again.p, cv.metrics.p)) r.fail("recomputed metrics differ");
      ++r.cases;
    }
  }
  return r;
}

inline PropertyResult check_fold_balance(std::size_t trials = 300, std::uint64_t seed = 5) {
  PropertyResult r{"stratified folds are balanced", true, {}, 0};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> n(2, 120), kd(2, 10);
  std::bernoulli_distribution coin(0.3);
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<int> y(n(rng));
    for (auto& v : y) v = coin(rng) ? 1 : 0;
    std::size_t k = std::min(kd(rng), y.size());
    auto plan = stratified_kfold(y, k, rng());
    std::vector<std::array<std::size_t, 2>> count(k, {0, 0});
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (plan.assignment[i] >= k) r.fail("fold index out of range");
      else ++count[plan.assignment[i]][y[i]];
    }
    for (int c : {0, 1}) {
      std::size_t lo = SIZE_MAX, hi = 0;
      for (const auto& f : count) lo = std::min(lo, f[c]), hi = std::max(hi, f[c]);
      if (hi - lo > 1) r.fail("class " + std::to_string(c) + " spread " + std::to_string(hi - lo));
    }
    std::size_t lo = SIZE_MAX, hi = 0;
    for (const auto& f : count) lo = std::min(lo, f[0] + f[1]), hi = std::max(hi, f[0] + f[1]);
    if (hi - lo > 1) r.fail("fold sizes spread " + std::to_string(hi - lo));
    ++r.cases;
  }
  return r;
}

inline PropertyResult check_canonical_symmetry(std::size_t trials = 200, std::uint64_t seed = 6) {
  PropertyResult r{"pair handling is symmetric", true, {}, 0};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> id(0, 50);
  for (std::size_t t = 0; t < trials; ++t) {
    EntityId a("X" + std::to_string(id(rng))), b("X" + std::to_string(id(rng)));
    if (a == b) continue;
    if (canonical_pair(a, b) != canonical_pair(b, a)) r.fail("canonical_pair depends on order");
    if (!(canonical_pair(a, b).first < canonical_pair(a, b).second)) r.fail("canonical_pair not ordered");
    if (RecRef::make(a, b, Predicate::interacted_with) != RecRef::make(b, a, Predicate::interacted_with))
      r.fail("symmetric RecRef depends on order");
    ++r.cases;
  }
  // Annotation records written either way round attach to the same row.
  for (std::size_t t = 0; t < 50; ++t) {
    auto rs = random_store(rng, 8);
    auto ds = expand_topic_pairs(rs.store);
    if (ds.rows.empty()) continue;
    std::vector<AnnotationRecord> fwd, rev;
    for (const auto& row : ds.rows) {
      auto rec = topic_annotation(row.pair.first.str(), row.pair.second.str(), row.shared_subject.str(),
                                  id(rng) % 2 ? Label::one : Label::zero);
      rec.h2_relevant_to_h1_archive = id(rng) % 2 ? Label::one : Label::zero;
      rec.h2_mentioned_in_h1_archive = id(rng) % 2 ? Label::one : Label::zero;
      fwd.push_back(rec);
      rev.push_back(rec.flipped());
    }
    auto x = attach_annotations(ds, fwd).dataset;
    auto y = attach_annotations(ds, rev).dataset;
    if (!(x == y)) r.fail("flipped annotations attach differently");
    if (!(x.unique_pairs() == ds.unique_pairs())) r.fail("attach changed the pair set");
    ++r.cases;
  }
  return r;
}

inline PropertyResult check_roundtrip(std::size_t trials = 40, std::uint64_t seed = 7) {
  PropertyResult r{"ingest/export round-trip", true, {}, 0};
  std::mt19937_64 rng(seed);
  const char* snippets[] = {"plain text", "comma, quote \" and\nnewline", "accents: Bérenson, Łódź", ""};
  for (std::size_t t = 0; t < trials; ++t) {
    auto rs = random_store(rng, 8);
    Store s = rs.store;
    for (std::size_t h = 0; h < rs.historians; ++h)
      s.set_text({EntityId(hid(h)), TextField::biography, snippets[(h + t) % 4]});
    std::map<AnnotationTable, std::vector<AnnotationRecord>> ann;
    for (const auto& row : expand_topic_pairs(s).rows)
      ann[AnnotationTable::artists_periods].push_back(
          topic_annotation(row.pair.second.str(), row.pair.first.str(), row.shared_subject.str(),
                           t % 2 ? Label::one : Label::zero, Label::one));
    for (const auto& row : expand_institution_pairs(s).rows) {
      auto rec = inst_annotation(row.pair.first.str(), row.pair.second.str(), row.shared_subject.str(), Label::one);
      rec.relation_kind_note = "colleagues, \"same\" chair";
      ann[AnnotationTable::institutions].push_back(rec);
    }
    auto dir = temp_dir("roundtrip");
    auto manifest = export_store(s, dir, ann);
    auto back = ingest(load_manifest(manifest));
    if (!(back.store == s)) r.fail("store differs after round-trip " + std::to_string(t));
    if (back.store.content_hash() != s.content_hash()) r.fail("content hash differs");
    for (const auto& [table, rows] : ann)
      if (back.annotations[table] != rows) r.fail("annotations differ after round-trip");
    auto again = export_store(back.store, dir / "second", back.annotations);
    auto third = ingest(load_manifest(again));
    if (!(third.store == back.store)) r.fail("second round-trip differs");
    fs::remove_all(dir);
    ++r.cases;
  }
  return r;
}

inline PropertyResult check_replay_idempotence(std::size_t trials = 30, std::uint64_t seed = 8) {
  PropertyResult r{"decision replay is idempotent", true, {}, 0};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, 4), coin(0, 1);
  for (std::size_t t = 0; t < trials; ++t) {
    Store base;
    for (int i = 0; i < 5; ++i) put(base, hid(i), EntityKind::historian, "Historian " + hid(i));
    auto dir = temp_dir("replay");
    auto path = dir / "decisions.jsonl";
    Store live = base;
    std::map<EntityPair, int> oracle;
    {
      DecisionLog log(path);
      for (int n = 0; n < 25; ++n) {
        int a = pick(rng), b = pick(rng);
        if (a == b) continue;
        Verdict v = coin(rng) ? Verdict::accept : Verdict::reject;
        Decision d{RecRef::make(EntityId(hid(a)), EntityId(hid(b)), Predicate::interacted_with), v,
                   coin(rng) ? "ann" : "bo", "2024-01-01T00:00:00Z", "req-" + std::to_string(n)};
        record_decision(live, log, d);
        oracle[canonical_pair(EntityId(hid(a)), EntityId(hid(b)))] = v == Verdict::accept ? 1 : 0;
        if (record_decision(live, log, d)) r.fail("repeated request id appended twice");
      }
      if (log.pair_labels() != oracle) r.fail("labels differ from last-verdict oracle");
    }
    DecisionLog first(path), second(path);
    if (first.pair_labels() != second.pair_labels() || first.pair_labels() != oracle)
      r.fail("reloading the log changed labels");
    Store once = base, twice = base;
    replay_decisions(once, first);
    replay_decisions(twice, first);
    replay_decisions(twice, second);
    if (!(once == twice) || !(once == live)) r.fail("replay is not idempotent");
    fs::remove_all(dir);
    ++r.cases;
  }
  return r;
}

inline std::vector<PropertyResult> run_property_suites() {
  return {check_expansion_oracle(), check_lr_gradient(),        check_nb_normalization(),
          check_metric_oracle(),    check_fold_balance(),       check_canonical_symmetry(),
          check_roundtrip(),        check_replay_idempotence()};
}

}  // namespace relrec::testing
