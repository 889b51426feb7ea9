#pragma once
// Logistic regression, naive Bayes and a CART-style decision tree.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "relrec/features.hpp"

namespace relrec {

enum class ModelKind { lr, nb, dt };

inline constexpr ModelKind all_model_kinds[] = {ModelKind::lr, ModelKind::nb, ModelKind::dt};

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::lr: return "lr";
    case ModelKind::nb: return "nb";
    case ModelKind::dt: return "dt";
  }
  return "lr";
}

inline std::optional<ModelKind> parse_model_kind(std::string_view s) {
  if (s == "lr") return ModelKind::lr;
  if (s == "nb") return ModelKind::nb;
  if (s == "dt") return ModelKind::dt;
  return std::nullopt;
}

struct Hyperparams {
  double lambda = 1.0;  // L2 strength; the intercept is not penalized
  double tolerance = 1e-6;
  int max_iterations = 1000;
  double variance_floor = 1e-9;
  std::optional<int> max_depth;
};

// Row-major design matrix plus labels.
struct Samples {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  std::vector<bool> binary;  // per feature

  std::size_t size() const { return y.size(); }
  std::size_t dim() const { return binary.size(); }
};

inline Samples to_samples(const LabeledDataset& data, std::span<const std::size_t> rows) {
  Samples s;
  for (Feature f : data.spec.features) s.binary.push_back(is_binary(f));
  for (std::size_t i : rows) {
    s.x.push_back(data.rows[i].x);
    s.y.push_back(data.rows[i].y);
  }
  return s;
}

inline Samples to_samples(const LabeledDataset& data) {
  std::vector<std::size_t> all(data.rows.size());
  std::iota(all.begin(), all.end(), 0);
  return to_samples(data, all);
}

struct LrParams {
  std::vector<double> weights;
  double intercept = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;
};

struct NbFeature {
  bool binary = false;
  double p_one[2] = {0.5, 0.5};  // Bernoulli: P(x=1 | class)
  double mean[2] = {0.0, 0.0};   // Gaussian
  double var[2] = {1.0, 1.0};
};

struct NbParams {
  double prior[2] = {0.5, 0.5};
  std::vector<NbFeature> features;
};

struct DtNode {
  bool leaf = true;
  std::size_t feature = 0;
  double threshold = 0.0;  // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  std::size_t n0 = 0;
  std::size_t n1 = 0;
};

struct DtParams {
  std::vector<DtNode> nodes;  // nodes[0] is the root
};

struct TrainedModel {
  ModelKind kind = ModelKind::lr;
  FeatureSpec spec;
  Unit unit = Unit::historian_pair;
  std::uint64_t seed = 0;
  std::variant<LrParams, NbParams, DtParams> params;
};

struct Prediction {
  int label = 0;
  double score = 0.0;  // P(class 1)
};

namespace detail {

inline void require_both_classes(const Samples& s, const char* what) {
  std::size_t pos = std::count(s.y.begin(), s.y.end(), 1);
  if (s.size() == 0 || pos == 0 || pos == s.size())
    throw Error(ErrorCode::degenerate_data, std::string(what) + " needs at least one example of each class");
}

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace detail

// Objective: mean log-loss + lambda/(2n) * |w|^2. `theta` = (w..., b).
inline double lr_objective(const Samples& s, std::span<const double> theta, double lambda) {
  std::size_t d = s.dim(), n = s.size();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double z = theta[d];
    for (std::size_t j = 0; j < d; ++j) z += theta[j] * s.x[i][j];
    loss += detail::softplus(z) - s.y[i] * z;
  }
  double reg = 0.0;
  for (std::size_t j = 0; j < d; ++j) reg += theta[j] * theta[j];
  return (loss + 0.5 * lambda * reg) / static_cast<double>(n);
}

inline std::vector<double> lr_gradient(const Samples& s, std::span<const double> theta, double lambda) {
  std::size_t d = s.dim(), n = s.size();
  std::vector<double> g(d + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double z = theta[d];
    for (std::size_t j = 0; j < d; ++j) z += theta[j] * s.x[i][j];
    double r = detail::sigmoid(z) - s.y[i];
    for (std::size_t j = 0; j < d; ++j) g[j] += r * s.x[i][j];
    g[d] += r;
  }
  for (std::size_t j = 0; j < d; ++j) g[j] += lambda * theta[j];
  for (double& v : g) v /= static_cast<double>(n);
  return g;
}

// Objective Hessian; the last coordinate is the unpenalized intercept.
inline std::vector<std::vector<double>> lr_hessian(const Samples& s, std::span<const double> theta, double lambda) {
  std::size_t d = s.dim(), n = s.size();
  std::vector<std::vector<double>> h(d + 1, std::vector<double>(d + 1, 0.0));
  std::vector<double> row(d + 1, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    double z = theta[d];
    for (std::size_t j = 0; j < d; ++j) z += theta[j] * s.x[i][j];
    double p = detail::sigmoid(z), w = p * (1 - p);
    for (std::size_t j = 0; j < d; ++j) row[j] = s.x[i][j];
    for (std::size_t a = 0; a <= d; ++a)
      for (std::size_t b = 0; b <= d; ++b) h[a][b] += w * row[a] * row[b];
  }
  for (auto& r : h)
    for (double& v : r) v /= static_cast<double>(n);
  for (std::size_t j = 0; j < d; ++j) h[j][j] += lambda / static_cast<double>(n);
  return h;
}

// Solves h x = g by Gaussian elimination with partial pivoting; empty when singular.
inline std::vector<double> solve_linear(std::vector<std::vector<double>> h, std::vector<double> g) {
  std::size_t m = g.size();
  for (std::size_t c = 0; c < m; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < m; ++r)
      if (std::abs(h[r][c]) > std::abs(h[piv][c])) piv = r;
    if (std::abs(h[piv][c]) < 1e-14) return {};
    std::swap(h[c], h[piv]);
    std::swap(g[c], g[piv]);
    for (std::size_t r = c + 1; r < m; ++r) {
      double f = h[r][c] / h[c][c];
      for (std::size_t k = c; k < m; ++k) h[r][k] -= f * h[c][k];
      g[r] -= f * g[c];
    }
  }
  std::vector<double> x(m);
  for (std::size_t c = m; c-- > 0;) {
    double v = g[c];
    for (std::size_t k = c + 1; k < m; ++k) v -= h[c][k] * x[k];
    x[c] = v / h[c][c];
  }
  return x;
}

// Damped Newton from zero with Armijo backtracking; falls back to the
// gradient direction when the Hessian is numerically singular.
inline LrParams fit_lr(const Samples& s, const Hyperparams& hp) {
  detail::require_both_classes(s, "logistic regression");
  std::size_t d = s.dim();
  std::vector<double> theta(d + 1, 0.0), trial(d + 1);
  double f = lr_objective(s, theta, hp.lambda);
  LrParams out;
  int it = 0;
  double gnorm = 0.0;
  for (; it < hp.max_iterations; ++it) {
    auto g = lr_gradient(s, theta, hp.lambda);
    double g2 = 0.0;
    for (double v : g) g2 += v * v;
    gnorm = std::sqrt(g2);
    if (gnorm <= hp.tolerance) break;
    auto dir = solve_linear(lr_hessian(s, theta, hp.lambda), g);
    double slope = 0.0;
    for (std::size_t j = 0; j < dir.size(); ++j) slope += dir[j] * g[j];
    if (dir.empty() || !(slope > 0)) {
      dir = g;
      slope = g2;
    }
    double t = 1.0;
    double ft = f;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t j = 0; j <= d; ++j) trial[j] = theta[j] - t * dir[j];
      ft = lr_objective(s, trial, hp.lambda);
      if (ft <= f - 1e-4 * t * slope) break;
      t *= 0.5;
    }
    if (!(ft <= f)) break;  // no descent possible at machine precision
    theta.swap(trial);
    f = ft;
  }
  out.weights.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(d));
  out.intercept = theta[d];
  out.iterations = it;
  out.gradient_norm = gnorm;
  for (double w : out.weights)
    if (!std::isfinite(w)) throw Error(ErrorCode::internal, "logistic regression diverged");
  return out;
}

inline NbParams fit_nb(const Samples& s, const Hyperparams& hp) {
  detail::require_both_classes(s, "naive Bayes");
  NbParams p;
  double n = static_cast<double>(s.size());
  double count[2] = {0, 0};
  for (int y : s.y) count[y] += 1;
  for (int c = 0; c < 2; ++c) p.prior[c] = (count[c] + 1.0) / (n + 2.0);
  for (std::size_t j = 0; j < s.dim(); ++j) {
    NbFeature f;
    f.binary = s.binary[j];
    for (int c = 0; c < 2; ++c) {
      double ones = 0, sum = 0, sq = 0;
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.y[i] != c) continue;
        double v = s.x[i][j];
        ones += v != 0.0;
        sum += v;
      }
      f.p_one[c] = (ones + 1.0) / (count[c] + 2.0);
      f.mean[c] = sum / count[c];
      for (std::size_t i = 0; i < s.size(); ++i)
        if (s.y[i] == c) sq += (s.x[i][j] - f.mean[c]) * (s.x[i][j] - f.mean[c]);
      f.var[c] = std::max(sq / count[c], hp.variance_floor);
    }
    p.features.push_back(f);
  }
  return p;
}

// Unnormalized log joint per class.
inline std::array<double, 2> nb_log_joint(const NbParams& p, std::span<const double> x) {
  std::array<double, 2> lj{std::log(p.prior[0]), std::log(p.prior[1])};
  constexpr double log_2pi = 1.8378770664093453;
  for (std::size_t j = 0; j < p.features.size(); ++j) {
    const auto& f = p.features[j];
    for (int c = 0; c < 2; ++c) {
      if (f.binary) {
        lj[c] += std::log(x[j] != 0.0 ? f.p_one[c] : 1.0 - f.p_one[c]);
      } else {
        double d = x[j] - f.mean[c];
        lj[c] += -0.5 * (log_2pi + std::log(f.var[c]) + d * d / f.var[c]);
      }
    }
  }
  return lj;
}

inline std::array<double, 2> nb_posterior(const NbParams& p, std::span<const double> x) {
  auto lj = nb_log_joint(p, x);
  double m = std::max(lj[0], lj[1]);
  double e0 = std::exp(lj[0] - m), e1 = std::exp(lj[1] - m);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

namespace detail {

inline double gini(std::size_t n0, std::size_t n1) {
  double n = static_cast<double>(n0 + n1);
  if (n == 0) return 0.0;
  double a = n0 / n, b = n1 / n;
  return 1.0 - a * a - b * b;
}

struct DtBuilder {
  const Samples& s;
  const Hyperparams& hp;
  DtParams out;

  int grow(std::vector<std::size_t> idx, int depth) {
    DtNode node;
    for (std::size_t i : idx) (s.y[i] ? node.n1 : node.n0)++;
    int id = static_cast<int>(out.nodes.size());
    out.nodes.push_back(node);
    bool pure = node.n0 == 0 || node.n1 == 0;
    if (pure || idx.size() < 2 || (hp.max_depth && depth >= *hp.max_depth)) return id;

    double parent = gini(node.n0, node.n1);
    double n = static_cast<double>(idx.size());
    // Impure nodes split even without Gini gain, so distinct inputs end in pure leaves.
    double best_gain = -1.0;
    std::optional<std::pair<std::size_t, double>> best;
    for (std::size_t f = 0; f < s.dim(); ++f) {
      std::vector<std::pair<double, int>> vals;
      for (std::size_t i : idx) vals.push_back({s.x[i][f], s.y[i]});
      std::sort(vals.begin(), vals.end());
      std::size_t l0 = 0, l1 = 0;
      for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
        (vals[k].second ? l1 : l0)++;
        if (vals[k].first == vals[k + 1].first) continue;
        double thr = 0.5 * (vals[k].first + vals[k + 1].first);
        std::size_t r0 = node.n0 - l0, r1 = node.n1 - l1;
        double nl = static_cast<double>(l0 + l1), nr = static_cast<double>(r0 + r1);
        double gain = parent - (nl / n) * gini(l0, l1) - (nr / n) * gini(r0, r1);
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best = {f, thr};
        }
      }
    }
    if (!best) return id;
    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) (s.x[i][best->first] <= best->second ? left : right).push_back(i);
    int l = grow(std::move(left), depth + 1);
    int r = grow(std::move(right), depth + 1);
    auto& me = out.nodes[static_cast<std::size_t>(id)];
    me.leaf = false;
    me.feature = best->first;
    me.threshold = best->second;
    me.left = l;
    me.right = r;
    return id;
  }
};

}  // namespace detail

// Greedy Gini splits at midpoints of distinct values; ties keep the lowest
// feature index, then the lowest threshold.
inline DtParams fit_dt(const Samples& s, const Hyperparams& hp) {
  if (s.size() == 0) throw Error(ErrorCode::degenerate_data, "decision tree needs at least one example");
  detail::DtBuilder b{s, hp, {}};
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  b.grow(std::move(idx), 0);
  return std::move(b.out);
}

inline const DtNode& dt_leaf(const DtParams& p, std::span<const double> x) {
  const DtNode* node = &p.nodes.at(0);
  while (!node->leaf)
    node = &p.nodes.at(static_cast<std::size_t>(x[node->feature] <= node->threshold ? node->left : node->right));
  return *node;
}

inline std::size_t dt_depth(const DtParams& p, int id = 0) {
  const auto& n = p.nodes.at(static_cast<std::size_t>(id));
  if (n.leaf) return 0;
  return 1 + std::max(dt_depth(p, n.left), dt_depth(p, n.right));
}

inline TrainedModel train(ModelKind kind, const Samples& s, const FeatureSpec& spec, Unit unit,
                          const Hyperparams& hp, std::uint64_t seed = 0) {
  if (s.dim() != spec.features.size()) throw Error(ErrorCode::shape, "samples do not match spec " + spec.name);
  TrainedModel m{kind, spec, unit, seed, LrParams{}};
  switch (kind) {
    case ModelKind::lr: m.params = fit_lr(s, hp); break;
    case ModelKind::nb: m.params = fit_nb(s, hp); break;
    case ModelKind::dt: m.params = fit_dt(s, hp); break;
  }
  return m;
}

inline TrainedModel train_lr(const LabeledDataset& d, const Hyperparams& hp = {}) {
  return train(ModelKind::lr, to_samples(d), d.spec, d.unit, hp);
}
inline TrainedModel train_nb(const LabeledDataset& d, const Hyperparams& hp = {}) {
  return train(ModelKind::nb, to_samples(d), d.spec, d.unit, hp);
}
inline TrainedModel train_dt(const LabeledDataset& d, const Hyperparams& hp = {}) {
  return train(ModelKind::dt, to_samples(d), d.spec, d.unit, hp);
}

inline Prediction predict(const TrainedModel& m, std::span<const double> x) {
  if (x.size() != m.spec.features.size())
    throw Error(ErrorCode::shape, "expected " + std::to_string(m.spec.features.size()) + " features, got " +
                                      std::to_string(x.size()));
  return std::visit(
      [&](const auto& p) -> Prediction {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, LrParams>) {
          double z = p.intercept;
          for (std::size_t j = 0; j < x.size(); ++j) z += p.weights[j] * x[j];
          double score = detail::sigmoid(z);
          return {score >= 0.5 ? 1 : 0, score};
        } else if constexpr (std::is_same_v<P, NbParams>) {
          double score = nb_posterior(p, x)[1];
          return {score >= 0.5 ? 1 : 0, score};
        } else {
          // Leaf majority; an even leaf predicts class 0.
          const auto& leaf = dt_leaf(p, x);
          double score = static_cast<double>(leaf.n1) / static_cast<double>(leaf.n0 + leaf.n1);
          return {leaf.n1 > leaf.n0 ? 1 : 0, score};
        }
      },
      m.params);
}

inline nlohmann::json to_json(const TrainedModel& m) {
  using nlohmann::json;
  json j{{"kind", to_string(m.kind)}, {"spec", m.spec.name}, {"unit", to_string(m.unit)}, {"seed", m.seed}};
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, LrParams>) {
          j["weights"] = p.weights;
          j["intercept"] = p.intercept;
          j["iterations"] = p.iterations;
          j["gradient_norm"] = p.gradient_norm;
        } else if constexpr (std::is_same_v<P, NbParams>) {
          j["prior"] = {p.prior[0], p.prior[1]};
          json fs = json::array();
          for (const auto& f : p.features) {
            if (f.binary)
              fs.push_back({{"type", "bernoulli"}, {"p_one", {f.p_one[0], f.p_one[1]}}});
            else
              fs.push_back({{"type", "gaussian"}, {"mean", {f.mean[0], f.mean[1]}}, {"var", {f.var[0], f.var[1]}}});
          }
          j["features"] = fs;
        } else {
          json ns = json::array();
          for (const auto& n : p.nodes) {
            json node{{"n0", n.n0}, {"n1", n.n1}};
            if (!n.leaf) {
              node["feature"] = n.feature;
              node["threshold"] = n.threshold;
              node["left"] = n.left;
              node["right"] = n.right;
            }
            ns.push_back(node);
          }
          j["nodes"] = ns;
        }
      },
      m.params);
  return j;
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
  try {
    auto kind = parse_model_kind(j.at("kind").get<std::string>());
    auto unit = parse_unit(j.at("unit").get<std::string>());
    if (!kind || !unit) throw Error(ErrorCode::schema, "model kind/unit not recognised");
    TrainedModel m{*kind, feature_spec(j.at("spec").get<std::string>()), *unit, j.value("seed", std::uint64_t{0}),
                   LrParams{}};
    switch (*kind) {
      case ModelKind::lr: {
        LrParams p;
        p.weights = j.at("weights").get<std::vector<double>>();
        p.intercept = j.at("intercept").get<double>();
        p.iterations = j.value("iterations", 0);
        p.gradient_norm = j.value("gradient_norm", 0.0);
        m.params = p;
        break;
      }
      case ModelKind::nb: {
        NbParams p;
        p.prior[0] = j.at("prior").at(0).get<double>();
        p.prior[1] = j.at("prior").at(1).get<double>();
        for (const auto& f : j.at("features")) {
          NbFeature nf;
          nf.binary = f.at("type") == "bernoulli";
          for (int c = 0; c < 2; ++c) {
            if (nf.binary) {
              nf.p_one[c] = f.at("p_one").at(c).get<double>();
            } else {
              nf.mean[c] = f.at("mean").at(c).get<double>();
              nf.var[c] = f.at("var").at(c).get<double>();
            }
          }
          p.features.push_back(nf);
        }
        m.params = p;
        break;
      }
      case ModelKind::dt: {
        DtParams p;
        for (const auto& n : j.at("nodes")) {
          DtNode node;
          node.n0 = n.at("n0").get<std::size_t>();
          node.n1 = n.at("n1").get<std::size_t>();
          if (n.contains("feature")) {
            node.leaf = false;
            node.feature = n.at("feature").get<std::size_t>();
            node.threshold = n.at("threshold").get<double>();
            node.left = n.at("left").get<int>();
            node.right = n.at("right").get<int>();
          }
          p.nodes.push_back(node);
        }
        m.params = p;
        break;
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::schema, std::string("malformed model: ") + e.what());
  }
}

}  // namespace relrec
