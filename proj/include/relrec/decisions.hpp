#pragma once
// Append-only reviewer decision log (JSON lines). Accepted recommendations
// become statements in the "decisions" named graph.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "relrec/core_model.hpp"
#include "relrec/expansion.hpp"

namespace relrec {

inline constexpr const char* decisions_graph = "decisions";

// Symmetric predicates are stored with canonical (subject, object).
struct RecRef {
  EntityId subject;
  EntityId object;
  Predicate predicate;

  static RecRef make(EntityId s, EntityId o, Predicate p) {
    if (is_symmetric(p)) {
      auto c = canonical_pair(s, o);
      return {c.first, c.second, p};
    }
    if (s == o) throw Error(ErrorCode::invalid_pair, "recommendation endpoints must differ");
    return {std::move(s), std::move(o), p};
  }

  friend auto operator<=>(const RecRef&, const RecRef&) = default;
  friend bool operator==(const RecRef&, const RecRef&) = default;
};

enum class Verdict { accept, reject };

inline std::string_view to_string(Verdict v) { return v == Verdict::accept ? "accept" : "reject"; }

inline std::optional<Verdict> parse_verdict(std::string_view s) {
  if (s == "accept") return Verdict::accept;
  if (s == "reject") return Verdict::reject;
  return std::nullopt;
}

struct Decision {
  RecRef ref;
  Verdict verdict = Verdict::accept;
  std::string reviewer;
  std::string timestamp;
  std::string request_id;  // idempotency key; empty = none
};

inline nlohmann::json to_json(const Decision& d) {
  nlohmann::json j{{"pair", {d.ref.subject.str(), d.ref.object.str()}},
                   {"predicate", to_string(d.ref.predicate)},
                   {"verdict", to_string(d.verdict)},
                   {"reviewer", d.reviewer},
                   {"timestamp", d.timestamp}};
  if (!d.request_id.empty()) j["request_id"] = d.request_id;
  return j;
}

inline Decision decision_from_json(const nlohmann::json& j) {
  try {
    const auto& pair = j.at("pair");
    if (!pair.is_array() || pair.size() != 2) throw Error(ErrorCode::schema, "decision pair must have two ids");
    auto verdict = parse_verdict(j.at("verdict").get<std::string>());
    if (!verdict) throw Error(ErrorCode::schema, "verdict must be accept or reject");
    Decision d{RecRef::make(EntityId(pair[0].get<std::string>()), EntityId(pair[1].get<std::string>()),
                            require_predicate(j.at("predicate").get<std::string>())),
               *verdict, j.value("reviewer", std::string()), j.value("timestamp", std::string()),
               j.value("request_id", std::string())};
    if (d.reviewer.empty()) throw Error(ErrorCode::schema, "decision needs a reviewer");
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::schema, std::string("malformed decision: ") + e.what());
  }
}

class DecisionLog {
 public:
  DecisionLog() = default;

  // Replays an existing log file; new decisions are appended to it.
  explicit DecisionLog(std::filesystem::path path) : path_(std::move(path)) {
    if (!std::filesystem::exists(*path_)) return;
    std::ifstream in(*path_);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        remember(decision_from_json(nlohmann::json::parse(line)));
      } catch (const std::exception& e) {
        throw Error(ErrorCode::parse, std::string("decision log: ") + e.what(), "line " + std::to_string(lineno));
      }
    }
  }

  // Returns false (and appends nothing) when the request id was already seen.
  bool append(const Decision& d) {
    if (!d.request_id.empty() && by_request_.count(d.request_id)) return false;
    if (path_) {
      if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
      std::ofstream out(*path_, std::ios::app);
      if (!out) throw Error(ErrorCode::io, "cannot append to " + path_->string());
      out << to_json(d).dump() << '\n';
      out.flush();
    }
    remember(d);
    return true;
  }

  const Decision* by_request(const std::string& request_id) const {
    auto it = by_request_.find(request_id);
    return it == by_request_.end() ? nullptr : &entries_[it->second];
  }

  const std::vector<Decision>& entries() const noexcept { return entries_; }

  // Latest verdict per recommendation, in log order.
  std::map<RecRef, Verdict> latest() const {
    std::map<RecRef, Verdict> out;
    for (const auto& d : entries_) out.insert_or_assign(d.ref, d.verdict);
    return out;
  }

  std::optional<Verdict> verdict(const RecRef& ref) const {
    std::optional<Verdict> v;
    for (const auto& d : entries_)
      if (d.ref == ref) v = d.verdict;
    return v;
  }

  // Training labels for historian pairs: accept -> 1, reject -> 0.
  std::map<EntityPair, int> pair_labels(Predicate p = Predicate::interacted_with) const {
    std::map<EntityPair, int> out;
    for (const auto& [ref, v] : latest())
      if (ref.predicate == p) out[{ref.subject, ref.object}] = v == Verdict::accept ? 1 : 0;
    return out;
  }

  const std::optional<std::filesystem::path>& path() const noexcept { return path_; }

 private:
  void remember(const Decision& d) {
    if (!d.request_id.empty()) by_request_[d.request_id] = entries_.size();
    entries_.push_back(d);
  }

  std::optional<std::filesystem::path> path_;
  std::vector<Decision> entries_;
  std::map<std::string, std::size_t> by_request_;
};

// A reference exists when both endpoints exist with kinds fitting the predicate.
inline void check_ref(const Store& store, const RecRef& ref) {
  const Entity* s = store.find(ref.subject);
  const Entity* o = store.find(ref.object);
  if (!s || !o)
    throw Error(ErrorCode::not_found, "recommendation references unknown entity " + (!s ? ref.subject : ref.object).str());
  auto expect = [&](EntityKind ks, EntityKind ko) {
    if (s->kind != ks || o->kind != ko)
      throw Error(ErrorCode::not_found, "no " + std::string(to_string(ref.predicate)) + " recommendation between " +
                                            ref.subject.str() + " and " + ref.object.str());
  };
  switch (ref.predicate) {
    case Predicate::interacted_with: expect(EntityKind::historian, EntityKind::historian); break;
    case Predicate::is_related_to: expect(EntityKind::collection, EntityKind::collection); break;
    case Predicate::includes_materials_relevant_to: expect(EntityKind::collection, EntityKind::historian); break;
    default: throw Error(ErrorCode::not_found, "predicate " + std::string(to_string(ref.predicate)) + " is never recommended");
  }
}

// Appends the decision and materializes the latest verdict in the store.
// Returns false when the request id had already been recorded.
inline bool record_decision(Store& store, DecisionLog& log, const Decision& d) {
  check_ref(store, d.ref);
  if (!log.append(d)) return false;
  if (log.verdict(d.ref) == Verdict::accept)
    store.add_statement({d.ref.subject, d.ref.predicate, d.ref.object, decisions_graph, StatementSource::decision});
  else
    store.remove_statement(d.ref.subject, d.ref.predicate, d.ref.object, decisions_graph);
  return true;
}

// Re-applies every logged decision to a freshly loaded store.
inline void replay_decisions(Store& store, const DecisionLog& log) {
  for (const auto& [ref, v] : log.latest()) {
    if (!store.contains(ref.subject) || !store.contains(ref.object)) continue;
    if (v == Verdict::accept)
      store.add_statement({ref.subject, ref.predicate, ref.object, decisions_graph, StatementSource::decision});
    else
      store.remove_statement(ref.subject, ref.predicate, ref.object, decisions_graph);
  }
}

}  // namespace relrec
