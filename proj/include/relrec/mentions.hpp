#pragma once
// Gazetteer mention detection over biographies and collection descriptions.
//
// Matching is longest-match, left-to-right, on word boundaries. Keys that
// resolve to more than one entity are never guessed: they produce no mention
// and an ambiguity record instead. An entity mentioned in its own record is
// not reported.

#include <algorithm>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "relrec/core_model.hpp"
#include "relrec/text_normalize.hpp"

namespace relrec {

class AliasIndex {
 public:
  void add(const std::string& surface, const EntityId& id) {
    auto tokens = tokenize(surface);
    if (tokens.empty()) return;
    std::string key;
    for (const auto& t : tokens) {
      if (!key.empty()) key.push_back(' ');
      key += t.folded;
    }
    keys_[key].insert(id);
    max_tokens_ = std::max(max_tokens_, tokens.size());
  }

  const std::set<EntityId>* lookup(const std::string& key) const {
    auto it = keys_.find(key);
    return it == keys_.end() ? nullptr : &it->second;
  }

  std::size_t size() const noexcept { return keys_.size(); }
  bool empty() const noexcept { return keys_.empty(); }
  std::size_t max_tokens() const noexcept { return max_tokens_; }
  const std::map<std::string, std::set<EntityId>>& keys() const noexcept { return keys_; }

 private:
  std::map<std::string, std::set<EntityId>> keys_;
  std::size_t max_tokens_ = 0;
};

inline AliasIndex build_alias_index(const Store& store) {
  AliasIndex index;
  for (const auto& [id, e] : store.entities()) {
    index.add(e.label, id);
    for (const auto& a : e.aliases) index.add(a, id);
  }
  return index;
}

struct Mention {
  EntityId entity_id;
  EntityId host_entity;
  TextField field;
  std::size_t start = 0;  // byte offsets into the record text
  std::size_t end = 0;
  std::string surface;

  friend bool operator==(const Mention&, const Mention&) = default;
};

struct AmbiguityRecord {
  EntityId host_entity;
  std::string surface;
  std::vector<EntityId> candidate_ids;
};

inline nlohmann::json to_json(const AmbiguityRecord& r) {
  nlohmann::json ids = nlohmann::json::array();
  for (const auto& id : r.candidate_ids) ids.push_back(id.str());
  return {{"host_entity", r.host_entity.str()}, {"surface", r.surface}, {"candidate_ids", ids}};
}

inline std::vector<Mention> find_mentions(const TextRecord& record, const AliasIndex& index,
                                          std::vector<AmbiguityRecord>* ambiguity_log = nullptr) {
  std::vector<Mention> out;
  if (index.empty()) return out;
  auto tokens = tokenize(record.text);
  std::size_t i = 0;
  while (i < tokens.size()) {
    std::size_t longest = std::min(index.max_tokens(), tokens.size() - i);
    bool matched = false;
    std::string key;
    for (std::size_t len = longest; len >= 1 && !matched; --len) {
      key.clear();
      for (std::size_t k = i; k < i + len; ++k) {
        if (k > i) key.push_back(' ');
        key += tokens[k].folded;
      }
      const auto* ids = index.lookup(key);
      if (!ids) continue;
      matched = true;
      std::size_t start = tokens[i].begin;
      std::size_t end = tokens[i + len - 1].end;
      std::string surface = record.text.substr(start, end - start);
      if (ids->size() > 1) {
        if (ambiguity_log)
          ambiguity_log->push_back({record.entity_id, surface, std::vector<EntityId>(ids->begin(), ids->end())});
      } else if (*ids->begin() != record.entity_id) {
        out.push_back({*ids->begin(), record.entity_id, record.field, start, end, std::move(surface)});
      }
      i += len;
    }
    if (!matched) ++i;
  }
  return out;
}

enum class MentionScope { bio_one, bio_both, archive_of_a, archive_of_b, any };

// Mentions for every text of a store snapshot, with the historian-pair flags
// derived from them.
class MentionTable {
 public:
  MentionTable() = default;

  MentionTable(const Store& store, const AliasIndex& index) {
    for (const auto& [key, record] : store.texts()) {
      auto found = find_mentions(record, index, &ambiguities_);
      for (const auto& m : found) mentioned_[{record.entity_id, record.field}].insert(m.entity_id);
      auto& dst = by_host_[record.entity_id];
      dst.insert(dst.end(), found.begin(), found.end());
    }
    for (const EntityId& h : store.entities_of_kind(EntityKind::historian)) {
      historians_.insert(h);
      collections_[h] = store.collections_of(h);
    }
  }

  const std::vector<Mention>& mentions_in(const EntityId& host) const {
    static const std::vector<Mention> none;
    auto it = by_host_.find(host);
    return it == by_host_.end() ? none : it->second;
  }

  const std::vector<AmbiguityRecord>& ambiguities() const noexcept { return ambiguities_; }

  // `target` mentioned in `host`'s text of the given field.
  bool mentioned(const EntityId& host, TextField field, const EntityId& target) const {
    auto it = mentioned_.find({host, field});
    return it != mentioned_.end() && it->second.count(target);
  }

  bool in_biography(const EntityId& host, const EntityId& target) const {
    return mentioned(host, TextField::biography, target);
  }

  // `target` mentioned in the description of some collection produced by `owner`.
  bool in_archive_of(const EntityId& owner, const EntityId& target) const {
    auto it = collections_.find(owner);
    if (it == collections_.end()) return false;
    return std::any_of(it->second.begin(), it->second.end(),
                       [&](const EntityId& c) { return mentioned(c, TextField::description, target); });
  }

  // Collections of `owner` whose description mentions `target`.
  std::vector<EntityId> archives_mentioning(const EntityId& owner, const EntityId& target) const {
    std::vector<EntityId> out;
    auto it = collections_.find(owner);
    if (it == collections_.end()) return out;
    for (const auto& c : it->second)
      if (mentioned(c, TextField::description, target)) out.push_back(c);
    return out;
  }

  bool mention_flag(const EntityId& a, const EntityId& b, MentionScope scope) const {
    for (const auto* h : {&a, &b})
      if (!historians_.count(*h)) throw Error(ErrorCode::not_found, "unknown historian " + h->str());
    switch (scope) {
      case MentionScope::bio_one: return in_biography(a, b) || in_biography(b, a);
      case MentionScope::bio_both: return in_biography(a, b) && in_biography(b, a);
      case MentionScope::archive_of_a: return in_archive_of(a, b);
      case MentionScope::archive_of_b: return in_archive_of(b, a);
      case MentionScope::any:
        return in_biography(a, b) || in_biography(b, a) || in_archive_of(a, b) || in_archive_of(b, a);
    }
    return false;
  }

  void write_ambiguity_log(std::ostream& out) const {
    for (const auto& r : ambiguities_) out << to_json(r).dump() << '\n';
  }

 private:
  std::map<EntityId, std::vector<Mention>> by_host_;
  std::map<std::pair<EntityId, TextField>, std::set<EntityId>> mentioned_;
  std::map<EntityId, std::set<EntityId>> collections_;
  std::set<EntityId> historians_;
  std::vector<AmbiguityRecord> ambiguities_;
};

}  // namespace relrec
