#pragma once
// The shared pipeline behind the CLI and the HTTP service: one loaded store,
// its derived tables, the decision log, and the active models.

#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "relrec/classifiers.hpp"
#include "relrec/decisions.hpp"
#include "relrec/eda.hpp"
#include "relrec/evaluation.hpp"
#include "relrec/expansion.hpp"
#include "relrec/features.hpp"
#include "relrec/ingest.hpp"
#include "relrec/mentions.hpp"
#include "relrec/recommend.hpp"

namespace relrec {

struct RecommendConfig {
  std::string historian_spec = "auto";  // "auto": best p1 among specs that surface unknown relations
  std::string historian_model = "auto";
  std::string collection_spec = "bio";
  std::string collection_model = "auto";
  FlagSource flag_source = FlagSource::annotation;
  std::size_t limit = 20;
};

struct RunConfig {
  std::optional<std::filesystem::path> manifest;
  std::filesystem::path out = "out";
  std::uint64_t seed = 13;
  std::size_t k = 5;
  Hyperparams learn;
  RecommendConfig recommend;
  std::optional<std::filesystem::path> decisions_log;
};

inline RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base = {}) {
  RunConfig c;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base.empty() ? base / path : path;
  };
  try {
    if (!j.is_object()) throw Error(ErrorCode::configuration, "config must be a JSON object");
    if (j.contains("manifest")) c.manifest = resolve(j.at("manifest").get<std::string>());
    if (j.contains("out")) c.out = resolve(j.at("out").get<std::string>());
    if (j.contains("decisions_log")) c.decisions_log = resolve(j.at("decisions_log").get<std::string>());
    c.seed = j.value("seed", c.seed);
    if (j.contains("learn")) {
      const auto& l = j.at("learn");
      c.learn.lambda = l.value("lambda", c.learn.lambda);
      c.learn.tolerance = l.value("tolerance", c.learn.tolerance);
      c.learn.max_iterations = l.value("max_iterations", c.learn.max_iterations);
      c.learn.variance_floor = l.value("variance_floor", c.learn.variance_floor);
      if (l.contains("max_depth") && !l.at("max_depth").is_null()) c.learn.max_depth = l.at("max_depth").get<std::size_t>();
      c.k = l.value("k", c.k);
      c.seed = l.value("seed", c.seed);
    }
    if (j.contains("recommend")) {
      const auto& r = j.at("recommend");
      c.recommend.historian_spec = r.value("historian_spec", c.recommend.historian_spec);
      c.recommend.historian_model = r.value("historian_model", c.recommend.historian_model);
      c.recommend.collection_spec = r.value("collection_spec", c.recommend.collection_spec);
      c.recommend.collection_model = r.value("collection_model", c.recommend.collection_model);
      c.recommend.limit = r.value("limit", c.recommend.limit);
      auto src = r.value("flag_source", std::string("annotation"));
      if (src == "annotation")
        c.recommend.flag_source = FlagSource::annotation;
      else if (src == "mentions")
        c.recommend.flag_source = FlagSource::mentions;
      else
        throw Error(ErrorCode::configuration, "flag_source must be annotation or mentions");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::configuration, std::string("bad config: ") + e.what());
  }
  if (c.learn.lambda < 0 || c.learn.tolerance <= 0 || c.learn.max_iterations == 0 || c.learn.variance_floor <= 0)
    throw Error(ErrorCode::configuration, "learn hyperparameters out of range");
  if (c.k < 2) throw Error(ErrorCode::configuration, "k must be at least 2");
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::configuration, std::string("config is not JSON: ") + e.what(), path.string());
  }
  return run_config_from_json(j, path.parent_path());
}

struct ModelSet {
  std::optional<TrainedModel> historian;
  std::optional<TrainedModel> collection;
};

class Engine {
 public:
  explicit Engine(RunConfig config) : config_(std::move(config)) {
    if (config_.decisions_log)
      log_ = DecisionLog(*config_.decisions_log);
    if (config_.manifest) load(load_manifest(*config_.manifest));
  }

  const RunConfig& config() const noexcept { return config_; }

  void load(const DumpManifest& m) {
    auto r = ingest(m);
    std::unique_lock lock(mutex_);
    store_ = std::move(r.store);
    annotations_ = std::move(r.annotations);
    uncertain_labels_ = r.uncertain_labels;
    counts_ = {{"entities", r.entity_count}, {"statements", r.statement_count}, {"texts", r.text_count}};
    replay_decisions(store_, log_);
    rebuild();
    loaded_ = true;
  }

  std::vector<AmbiguityRecord> ambiguities() const {
    std::shared_lock lock(mutex_);
    return mentions_.ambiguities();
  }

  bool loaded() const {
    std::shared_lock lock(mutex_);
    return loaded_;
  }

  nlohmann::json ingest_summary() const {
    std::shared_lock lock(mutex_);
    auto j = counts_;
    j["uncertain_labels"] = uncertain_labels_;
    j["annotations"] = nlohmann::json::object();
    for (const auto& [t, rows] : annotations_) j["annotations"][std::string(to_string(t))] = rows.size();
    j["ambiguities"] = mentions_.ambiguities().size();
    return j;
  }

  // Copies of the derived state, taken under the read lock.
  Store store() const {
    std::shared_lock lock(mutex_);
    return store_;
  }
  ExpandedDataset topics() const {
    std::shared_lock lock(mutex_);
    require_loaded();
    return topics_;
  }
  ExpandedDataset institutions() const {
    std::shared_lock lock(mutex_);
    require_loaded();
    return insts_;
  }
  ExpandedDataset merged() const {
    std::shared_lock lock(mutex_);
    require_loaded();
    return merge_tables(topics_, insts_);
  }

  nlohmann::json entity_json(const EntityId& id) const {
    std::shared_lock lock(mutex_);
    const Entity& e = store_.at(id);
    auto j = entity_to_json(e);
    nlohmann::json out = nlohmann::json::array(), in = nlohmann::json::array();
    for (const auto& s : store_.statements()) {
      nlohmann::json st{{"subject", s.subject.str()}, {"predicate", to_string(s.predicate)},
                        {"object", s.object.str()}, {"graph", s.graph}, {"source", to_string(s.source)}};
      if (s.subject == id) out.push_back(st);
      if (s.object == id) in.push_back(st);
    }
    j["statements"] = out;
    j["incoming"] = in;
    for (TextField f : {TextField::biography, TextField::description})
      if (const auto* t = store_.text(id, f)) j[std::string(to_string(f))] = t->text;
    return j;
  }

  EdaReport eda_report() const {
    std::shared_lock lock(mutex_);
    require_loaded();
    return build_eda_report(store_, topics_, insts_, merge_tables(topics_, insts_), uncertain_labels_);
  }

  NetworkExport network(NetworkMode mode) const {
    std::shared_lock lock(mutex_);
    require_loaded();
    return network_export(store_, mode == NetworkMode::topics ? topics_ : insts_);
  }

  // Feature datasets for every grid spec of the unit, with reviewer labels
  // folded in for historian pairs.
  std::vector<LabeledDataset> datasets(Unit unit) const {
    std::shared_lock lock(mutex_);
    return datasets_locked(unit);
  }

  LabeledDataset dataset(Unit unit, std::string_view spec) const {
    std::shared_lock lock(mutex_);
    return dataset_locked(unit, feature_spec(spec));
  }

  Grid grid(Unit unit) const {
    {
      std::lock_guard c(cache_mutex_);
      if (auto it = grids_.find(unit); it != grids_.end()) return it->second;
    }
    Grid g;
    {
      std::shared_lock lock(mutex_);
      g = evaluate_grid(datasets_locked(unit), config_.k, config_.seed, config_.learn);
    }
    std::lock_guard c(cache_mutex_);
    grids_[unit] = g;
    return g;
  }

  // Known/unknown split of each selected model's out-of-fold positives.
  nlohmann::json known_unknown(Unit unit) const {
    Grid g = grid(unit);
    auto data = datasets(unit);
    nlohmann::json out = nlohmann::json::object();
    for (const auto& d : data) {
      auto kind = select_model(g, d.spec.name);
      if (!kind) continue;
      const auto* c = g.cell(d.spec.name, *kind);
      out[d.spec.name] = to_json(cv_known_share(*c->result, d));
      out[d.spec.name]["model"] = to_string(*kind);
    }
    return out;
  }

  // Resolves "auto" spec and model choices against the grid.
  std::pair<std::string, ModelKind> resolve_choice(Unit unit, std::string spec, std::string model) const {
    if (spec == "auto") {
      if (unit == Unit::collection_pair) {
        spec = "bio";
      } else {
        spec = auto_historian_spec();
      }
    }
    const FeatureSpec& fs = feature_spec(spec);
    auto names = grid_spec_names(unit);
    if (std::find(names.begin(), names.end(), fs.name) == names.end())
      throw Error(ErrorCode::parameter, "spec " + spec + " is not defined for " + std::string(to_string(unit)));
    if (model == "auto") {
      auto kind = select_model(grid(unit), spec);
      if (!kind) throw Error(ErrorCode::degenerate_data, "no model could be evaluated for spec " + spec);
      return {spec, *kind};
    }
    auto kind = parse_model_kind(model);
    if (!kind) throw Error(ErrorCode::parameter, "model must be lr, nb, dt or auto");
    return {spec, *kind};
  }

  // Trains on the full labeled set and swaps the unit's active model.
  TrainedModel train(Unit unit, const std::string& spec, const std::string& model) {
    auto [name, kind] = resolve_choice(unit, spec, model);
    TrainedModel m;
    {
      std::shared_lock lock(mutex_);
      auto data = dataset_locked(unit, feature_spec(name));
      m = relrec::train(kind, to_samples(data), data.spec, unit, config_.learn, config_.seed);
    }
    std::lock_guard c(models_mutex_);
    auto next = std::make_shared<ModelSet>(models_ ? *models_ : ModelSet{});
    (unit == Unit::historian_pair ? next->historian : next->collection) = m;
    models_ = std::move(next);
    return m;
  }

  std::shared_ptr<const ModelSet> models() const {
    std::lock_guard c(models_mutex_);
    return models_;
  }

  // Trains the configured default models once; units whose data cannot
  // support a model fall back to rules only.
  std::shared_ptr<const ModelSet> ensure_models() {
    if (auto m = models(); m) return m;
    std::lock_guard once(train_mutex_);
    if (auto m = models(); m) return m;
    const auto& rc = config_.recommend;
    ModelSet set;
    auto attempt = [&](Unit u, const std::string& spec, const std::string& model) -> std::optional<TrainedModel> {
      try {
        auto [name, kind] = resolve_choice(u, spec, model);
        std::shared_lock lock(mutex_);
        auto data = dataset_locked(u, feature_spec(name));
        return relrec::train(kind, to_samples(data), data.spec, u, config_.learn, config_.seed);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::degenerate_data && e.code() != ErrorCode::missing_input) throw;
        return std::nullopt;
      }
    };
    set.historian = attempt(Unit::historian_pair, rc.historian_spec, rc.historian_model);
    set.collection = attempt(Unit::collection_pair, rc.collection_spec, rc.collection_model);
    std::lock_guard c(models_mutex_);
    if (!models_) models_ = std::make_shared<ModelSet>(std::move(set));
    return models_;
  }

  std::vector<Recommendation> recommend(const EntityId& entity, std::optional<std::size_t> limit = std::nullopt) {
    auto models = ensure_models();
    std::shared_lock lock(mutex_);
    require_loaded();
    RecommendContext ctx{&store_,
                         &pairs_,
                         &mentions_,
                         models->historian ? &*models->historian : nullptr,
                         models->collection ? &*models->collection : nullptr,
                         &log_};
    return recommend_for_entity(ctx, entity, limit ? limit : std::optional<std::size_t>(config_.recommend.limit));
  }

  // Single writer path. Returns false when the request id was already seen.
  bool record(Decision d) {
    if (d.timestamp.empty()) d.timestamp = detail::utc_now();
    std::unique_lock lock(mutex_);
    bool fresh = record_decision(store_, log_, d);
    if (fresh) {
      std::lock_guard c(cache_mutex_);
      grids_.clear();
    }
    return fresh;
  }

  const Decision* decision_by_request(const std::string& request_id) const {
    std::shared_lock lock(mutex_);
    return log_.by_request(request_id);
  }

  std::size_t decision_count() const {
    std::shared_lock lock(mutex_);
    return log_.entries().size();
  }

  std::map<EntityPair, int> decision_labels() const {
    std::shared_lock lock(mutex_);
    return log_.pair_labels();
  }

  std::filesystem::path export_snapshot(const std::filesystem::path& dir) const {
    std::shared_lock lock(mutex_);
    return export_store(store_, dir, annotations_);
  }

 private:
  void require_loaded() const {
    if (!loaded_) throw Error(ErrorCode::missing_input, "no catalogue loaded; pass --manifest or set it in the config");
  }

  void rebuild() {
    index_ = build_alias_index(store_);
    mentions_ = MentionTable(store_, index_);
    auto records = [&](AnnotationTable t) {
      auto it = annotations_.find(t);
      return it == annotations_.end() ? std::vector<AnnotationRecord>{} : it->second;
    };
    FlagOptions topic_opts{config_.recommend.flag_source, &mentions_, nullptr};
    topics_ = attach_annotations(expand_topic_pairs(store_), records(AnnotationTable::artists_periods), topic_opts)
                  .dataset;
    auto topic_flags = pair_flags(topics_);
    FlagOptions inst_opts{config_.recommend.flag_source, &mentions_, &topic_flags};
    insts_ = attach_annotations(expand_institution_pairs(store_), records(AnnotationTable::institutions), inst_opts)
                 .dataset;
    pairs_ = summarize_pairs(&topics_, &insts_);
    std::lock_guard c(cache_mutex_);
    grids_.clear();
    std::lock_guard m(models_mutex_);
    models_.reset();
  }

  LabeledDataset dataset_locked(Unit unit, const FeatureSpec& spec) const {
    require_loaded();
    auto d = build_features(&topics_, &insts_, spec, unit);
    if (unit == Unit::historian_pair) apply_label_overrides(d, log_.pair_labels());
    return d;
  }

  std::vector<LabeledDataset> datasets_locked(Unit unit) const {
    std::vector<LabeledDataset> out;
    for (const auto& name : grid_spec_names(unit)) out.push_back(dataset_locked(unit, feature_spec(name)));
    return out;
  }

  // Highest p1 among specs whose selected model predicts some relation not
  // already evidenced in a biography; any spec if none does.
  std::string auto_historian_spec() const {
    Grid g = grid(Unit::historian_pair);
    auto data = datasets(Unit::historian_pair);
    std::optional<std::pair<std::string, double>> best, fallback;
    for (const auto& d : data) {
      auto kind = select_model(g, d.spec.name);
      if (!kind) continue;
      const auto& res = *g.cell(d.spec.name, *kind)->result;
      double p1 = res.metrics.p1;
      if (!fallback || p1 > fallback->second) fallback = {d.spec.name, p1};
      auto share = cv_known_share(res, d);
      if (share.unknown_pct && *share.unknown_pct > 0 && (!best || p1 > best->second)) best = {d.spec.name, p1};
    }
    if (best) return best->first;
    if (fallback) return fallback->first;
    throw Error(ErrorCode::degenerate_data, "no historian spec could be evaluated");
  }

  RunConfig config_;
  mutable std::shared_mutex mutex_;
  bool loaded_ = false;
  Store store_;
  std::map<AnnotationTable, std::vector<AnnotationRecord>> annotations_;
  std::size_t uncertain_labels_ = 0;
  nlohmann::json counts_ = nlohmann::json::object();
  AliasIndex index_;
  MentionTable mentions_;
  ExpandedDataset topics_;
  ExpandedDataset insts_;
  PairSummaries pairs_;
  DecisionLog log_;

  mutable std::mutex cache_mutex_;
  mutable std::map<Unit, Grid> grids_;
  mutable std::mutex models_mutex_;
  std::shared_ptr<const ModelSet> models_;
  std::mutex train_mutex_;
};

// Artifact writers shared by the CLI and the service.

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline std::vector<std::filesystem::path> write_expand_artifacts(const Engine& e, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> files;
  auto put = [&](const std::string& name, const ExpandedDataset& ds) {
    auto p = dir / name;
    std::ofstream out(p);
    if (!out) throw Error(ErrorCode::io, "cannot write " + p.string());
    write_dataset(out, ds);
    files.push_back(p);
  };
  put("artists_periods.csv", e.topics());
  put("institutions.csv", e.institutions());
  put("merged.csv", e.merged());
  return files;
}

inline std::vector<std::filesystem::path> write_eda_artifacts(const Engine& e, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto report = e.eda_report();
  std::vector<std::filesystem::path> files{dir / "eda_report.txt", dir / "eda_report.json",
                                           dir / "network_topics.json", dir / "network_institutions.json"};
  {
    std::ofstream out(files[0]);
    if (!out) throw Error(ErrorCode::io, "cannot write " + files[0].string());
    write_report_text(out, report);
  }
  write_json_file(files[1], to_json(report));
  write_json_file(files[2], to_json(e.network(NetworkMode::topics)));
  write_json_file(files[3], to_json(e.network(NetworkMode::institutions)));
  return files;
}

inline std::vector<std::filesystem::path> write_grid_artifacts(const Engine& e, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> files;
  for (Unit u : {Unit::historian_pair, Unit::collection_pair}) {
    std::string stem = u == Unit::historian_pair ? "grid_historians" : "grid_collections";
    auto g = e.grid(u);
    auto j = to_json(g);
    j["known_unknown"] = e.known_unknown(u);
    write_json_file(dir / (stem + ".json"), j);
    {
      std::ofstream out(dir / (stem + ".tsv"));
      write_grid_table(out, g);
    }
    {
      std::ofstream out(dir / (stem + "_predictions.jsonl"));
      write_prediction_log(out, g, e.datasets(u));
    }
    files.push_back(dir / (stem + ".json"));
    files.push_back(dir / (stem + ".tsv"));
    files.push_back(dir / (stem + "_predictions.jsonl"));
  }
  return files;
}

}  // namespace relrec
