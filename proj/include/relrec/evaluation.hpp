#pragma once
// Stratified k-fold cross-validation, the p / p(1) / r(1) / a metric suite,
// the model x spec grid and precision-first model selection.
//
//   p     mean over folds of class-1 precision (a fold without positive
//         predictions contributes 0)
//   p1    class-1 precision over the pooled out-of-fold predictions
//   r1    class-1 recall over the pooled predictions
//   a     accuracy over the pooled predictions

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "relrec/classifiers.hpp"

namespace relrec {

struct FoldPlan {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> assignment;  // row -> fold

  std::vector<std::size_t> members(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
      if (assignment[i] == fold) out.push_back(i);
    return out;
  }
  std::vector<std::size_t> complement(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
      if (assignment[i] != fold) out.push_back(i);
    return out;
  }
};

namespace detail {

// Portable draw in [0, n): std::uniform_int_distribution is implementation-defined.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do v = rng();
  while (v >= limit);
  return v % n;
}

template <class T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_below(rng, i)]);
}

}  // namespace detail

// Each class is shuffled and dealt round-robin; the deal continues across
// classes so fold sizes stay within one of each other. Classes smaller than k
// land one member per fold.
inline FoldPlan stratified_kfold(const std::vector<int>& labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::parameter, "k must be at least 2");
  if (k > labels.size())
    throw Error(ErrorCode::parameter,
                "k=" + std::to_string(k) + " exceeds the " + std::to_string(labels.size()) + " rows");
  FoldPlan plan{k, seed, std::vector<std::size_t>(labels.size(), 0)};
  std::mt19937_64 rng(seed);
  std::size_t next = 0;
  for (int cls : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) idx.push_back(i);
    detail::shuffle(idx, rng);
    for (std::size_t i : idx) plan.assignment[i] = next++ % k;
  }
  return plan;
}

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  void add(int y, int label) {
    if (label == 1) (y == 1 ? tp : fp)++;
    else (y == 1 ? fn : tn)++;
  }
  std::size_t total() const { return tp + fp + tn + fn; }
  double precision1() const { return tp + fp ? double(tp) / double(tp + fp) : 0.0; }
  double precision0() const { return tn + fn ? double(tn) / double(tn + fn) : 0.0; }
  double recall1() const { return tp + fn ? double(tp) / double(tp + fn) : 0.0; }
  double accuracy() const { return total() ? double(tp + tn) / double(total()) : 0.0; }
  double macro_precision() const { return 0.5 * (precision0() + precision1()); }

  friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct EvalMetrics {
  double p = 0.0;
  double p1 = 0.0;
  double r1 = 0.0;
  double a = 0.0;
  double macro_p = 0.0;  // fold mean of the two-class macro precision, for audit
};

struct OutOfFoldPrediction {
  std::size_t row = 0;
  std::size_t fold = 0;
  int y = 0;
  int label = 0;
  double score = 0.0;
};

struct FoldOutcome {
  std::size_t fold = 0;
  Confusion confusion;
};

struct CvResult {
  ModelKind kind = ModelKind::lr;
  EvalMetrics metrics;
  Confusion pooled;
  std::vector<FoldOutcome> folds;
  std::vector<OutOfFoldPrediction> predictions;  // ordered by row
};

// Recomputes the metric suite from logged predictions.
inline EvalMetrics metrics_from_predictions(const std::vector<OutOfFoldPrediction>& preds, std::size_t k) {
  std::vector<Confusion> per_fold(k);
  Confusion pooled;
  for (const auto& p : preds) {
    per_fold.at(p.fold).add(p.y, p.label);
    pooled.add(p.y, p.label);
  }
  EvalMetrics m;
  for (const auto& c : per_fold) {
    m.p += c.precision1();
    m.macro_p += c.macro_precision();
  }
  m.p /= static_cast<double>(k);
  m.macro_p /= static_cast<double>(k);
  m.p1 = pooled.precision1();
  m.r1 = pooled.recall1();
  m.a = pooled.accuracy();
  return m;
}

inline CvResult cross_validate(ModelKind kind, const LabeledDataset& data, const FoldPlan& plan,
                               const Hyperparams& hp = {}) {
  if (plan.assignment.size() != data.rows.size())
    throw Error(ErrorCode::parameter, "fold plan does not cover the dataset");
  CvResult out;
  out.kind = kind;
  for (std::size_t f = 0; f < plan.k; ++f) {
    auto train_idx = plan.complement(f);
    auto test_idx = plan.members(f);
    TrainedModel model;
    try {
      model = train(kind, to_samples(data, train_idx), data.spec, data.unit, hp, plan.seed);
    } catch (const Error& e) {
      throw Error(e.code(), "fold " + std::to_string(f) + ": " + e.message(), e.detail());
    }
    FoldOutcome fo{f, {}};
    for (std::size_t i : test_idx) {
      auto pred = predict(model, data.rows[i].x);
      fo.confusion.add(data.rows[i].y, pred.label);
      out.pooled.add(data.rows[i].y, pred.label);
      out.predictions.push_back({i, f, data.rows[i].y, pred.label, pred.score});
    }
    out.folds.push_back(fo);
  }
  std::sort(out.predictions.begin(), out.predictions.end(),
            [](const auto& a, const auto& b) { return a.row < b.row; });
  out.metrics = metrics_from_predictions(out.predictions, plan.k);
  return out;
}

struct GridCell {
  std::string spec;
  ModelKind kind = ModelKind::lr;
  std::optional<CvResult> result;
  std::string error;  // set when the cell could not be evaluated
};

struct Grid {
  Unit unit = Unit::historian_pair;
  std::size_t k = 5;
  std::uint64_t seed = 13;
  std::vector<std::string> specs;
  std::vector<GridCell> cells;  // spec-major, kinds in lr, nb, dt order
  std::map<std::string, FoldPlan> plans;

  const GridCell* cell(std::string_view spec, ModelKind kind) const {
    for (const auto& c : cells)
      if (c.spec == spec && c.kind == kind) return &c;
    return nullptr;
  }
};

// One shared fold plan per spec; failures are recorded in the cell.
inline Grid evaluate_grid(const std::vector<LabeledDataset>& datasets, std::size_t k, std::uint64_t seed,
                          const Hyperparams& hp = {}) {
  Grid g;
  g.k = k;
  g.seed = seed;
  if (!datasets.empty()) g.unit = datasets.front().unit;
  for (const auto& d : datasets) {
    g.specs.push_back(d.spec.name);
    std::optional<FoldPlan> plan;
    std::string plan_error;
    try {
      plan = stratified_kfold(d.labels(), k, seed);
      g.plans[d.spec.name] = *plan;
    } catch (const Error& e) {
      plan_error = e.what();
    }
    for (ModelKind kind : all_model_kinds) {
      GridCell cell{d.spec.name, kind, std::nullopt, plan_error};
      if (plan) {
        try {
          cell.result = cross_validate(kind, d, *plan, hp);
        } catch (const Error& e) {
          cell.error = e.what();
        }
      }
      g.cells.push_back(std::move(cell));
    }
  }
  return g;
}

// Highest p1; near-ties go to nb, then lr, then dt.
inline ModelKind select_model(const std::vector<std::pair<ModelKind, double>>& column) {
  if (column.empty()) throw Error(ErrorCode::parameter, "select_model needs at least one candidate");
  auto rank = [](ModelKind k) { return k == ModelKind::nb ? 0 : k == ModelKind::lr ? 1 : 2; };
  auto tied = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max({std::abs(a), std::abs(b), 1e-300}); };
  auto best = column.front();
  for (const auto& c : column) {
    if (tied(c.second, best.second)) {
      if (rank(c.first) < rank(best.first)) best = c;
    } else if (c.second > best.second) {
      best = c;
    }
  }
  return best.first;
}

inline std::optional<ModelKind> select_model(const Grid& g, std::string_view spec) {
  std::vector<std::pair<ModelKind, double>> column;
  for (ModelKind k : all_model_kinds)
    if (const auto* c = g.cell(spec, k); c && c->result) column.push_back({k, c->result->metrics.p1});
  if (column.empty()) return std::nullopt;
  return select_model(column);
}

inline nlohmann::json to_json(const EvalMetrics& m) {
  return {{"p", m.p}, {"p1", m.p1}, {"r1", m.r1}, {"a", m.a}, {"macro_p", m.macro_p}};
}

inline nlohmann::json to_json(const Confusion& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

inline nlohmann::json to_json(const Grid& g) {
  using nlohmann::json;
  json cells = json::array();
  for (const auto& c : g.cells) {
    json j{{"spec", c.spec}, {"model", to_string(c.kind)}};
    if (c.result) {
      j["metrics"] = to_json(c.result->metrics);
      j["confusion"] = to_json(c.result->pooled);
      json folds = json::array();
      for (const auto& f : c.result->folds) folds.push_back({{"fold", f.fold}, {"confusion", to_json(f.confusion)}});
      j["folds"] = folds;
    } else {
      j["error"] = c.error;
    }
    cells.push_back(j);
  }
  json selected = json::object();
  for (const auto& s : g.specs)
    if (auto k = select_model(g, s)) selected[s] = to_string(*k);
  return {{"unit", to_string(g.unit)}, {"k", g.k}, {"seed", g.seed}, {"specs", g.specs},
          {"cells", cells}, {"selected", selected}};
}

namespace detail {
inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}
}  // namespace detail

// Tab-separated, models as rows and specs as columns; each cell "p=.. p1=.. r1=.. a=..".
inline void write_grid_table(std::ostream& out, const Grid& g) {
  out << "model";
  for (const auto& s : g.specs) out << '\t' << s;
  out << '\n';
  for (ModelKind k : all_model_kinds) {
    out << to_string(k);
    for (const auto& s : g.specs) {
      const auto* c = g.cell(s, k);
      out << '\t';
      if (c && c->result) {
        const auto& m = c->result->metrics;
        out << "p=" << detail::fmt2(m.p) << " p1=" << detail::fmt2(m.p1) << " r1=" << detail::fmt2(m.r1)
            << " a=" << detail::fmt2(m.a);
      } else {
        out << "error";
      }
    }
    out << '\n';
  }
}

// Per-fold prediction log: one JSON object per out-of-fold prediction.
inline void write_prediction_log(std::ostream& out, const Grid& g, const std::vector<LabeledDataset>& datasets) {
  for (const auto& c : g.cells) {
    if (!c.result) continue;
    const LabeledDataset* d = nullptr;
    for (const auto& ds : datasets)
      if (ds.spec.name == c.spec) d = &ds;
    for (const auto& p : c.result->predictions) {
      nlohmann::json j{{"spec", c.spec}, {"model", to_string(c.kind)}, {"fold", p.fold},
                       {"y", p.y}, {"label", p.label}, {"score", p.score}};
      if (d) j["pair"] = {d->rows[p.row].pair.first.str(), d->rows[p.row].pair.second.str()};
      out << j.dump() << '\n';
    }
  }
}

}  // namespace relrec
