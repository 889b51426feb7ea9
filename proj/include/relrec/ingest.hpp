#pragma once
// Dump loaders and writers.
//
//   entities    JSON lines  {"id","kind","label","aliases":[...],"external_id"?}
//   statements  CSV         subject,predicate,object,graph[,source]
//   texts       JSON lines  {"entity_id","field","text"}
//   annotations CSV         header A1..A11 (artists_periods) or I1..I5 (institutions)
//
// Every loader is fail-fast: the first bad line aborts the file.

#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "relrec/core_model.hpp"
#include "relrec/csv.hpp"
#include "relrec/error.hpp"

namespace relrec {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Annotation cell value before normalization: 0, 0.5 (uncertain) or 1.
enum class Label { zero, half, one };

inline std::string to_string(Label l) {
  switch (l) {
    case Label::zero: return "0";
    case Label::half: return "0.5";
    case Label::one: return "1";
  }
  return "0";
}

// Blank cells read as 0: undocumented relations were filled with 0.
inline Label parse_label(std::string_view cell) {
  while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
  while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
  if (cell.empty()) return Label::zero;
  double v = 0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec == std::errc() && ptr == cell.data() + cell.size()) {
    if (v == 0.0) return Label::zero;
    if (v == 0.5) return Label::half;
    if (v == 1.0) return Label::one;
  }
  throw Error(ErrorCode::label, "label '" + std::string(cell) + "' not in {0, 0.5, 1}");
}

inline bool is_one(Label l) { return l == Label::one; }
inline bool is_one(const std::optional<Label>& l) { return l && *l == Label::one; }

enum class AnnotationTable { artists_periods, institutions };

inline std::string_view to_string(AnnotationTable t) {
  return t == AnnotationTable::artists_periods ? "artists_periods" : "institutions";
}

inline std::optional<AnnotationTable> parse_annotation_table(std::string_view s) {
  if (s == "artists_periods") return AnnotationTable::artists_periods;
  if (s == "institutions") return AnnotationTable::institutions;
  return std::nullopt;
}

inline const std::vector<std::string>& annotation_header(AnnotationTable t) {
  static const std::vector<std::string> ap{"A1", "A2", "A3", "A4", "A5", "A6",
                                           "A7", "A8", "A9", "A10", "A11"};
  static const std::vector<std::string> in{"I1", "I2", "I3", "I4", "I5"};
  return t == AnnotationTable::artists_periods ? ap : in;
}

struct AnnotationRecord {
  AnnotationTable table = AnnotationTable::artists_periods;
  EntityId art_hist_1;                  // A1 / I1
  EntityId art_hist_2;                  // A2 / I2
  EntityId shared_subject;              // A3 / I3
  Label relation_exists = Label::zero;  // A4 / I4
  // artists_periods only
  std::optional<Label> recorded_in_one_bio;        // A5
  std::optional<Label> recorded_in_both_bios;      // A6
  std::optional<Label> collaborated_on_subject;    // A7
  std::optional<Label> h2_relevant_to_h1_archive;  // A8
  std::optional<Label> h2_mentioned_in_h1_archive; // A9
  std::optional<Label> h1_relevant_to_h2_archive;  // A10
  std::optional<Label> h1_mentioned_in_h2_archive; // A11
  // institutions only
  std::optional<std::string> relation_kind_note;   // I5

  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;

  template <class F>
  void for_each_label(F&& f) {
    f(relation_exists);
    for (auto* l : {&recorded_in_one_bio, &recorded_in_both_bios, &collaborated_on_subject,
                    &h2_relevant_to_h1_archive, &h2_mentioned_in_h1_archive,
                    &h1_relevant_to_h2_archive, &h1_mentioned_in_h2_archive})
      if (*l) f(**l);
  }

  // Swaps historian 1 and 2 along with every directional column.
  AnnotationRecord flipped() const {
    AnnotationRecord r = *this;
    std::swap(r.art_hist_1, r.art_hist_2);
    std::swap(r.h2_relevant_to_h1_archive, r.h1_relevant_to_h2_archive);
    std::swap(r.h2_mentioned_in_h1_archive, r.h1_mentioned_in_h2_archive);
    return r;
  }
};

namespace detail {

inline std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  return in;
}

inline std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  return out;
}

inline std::string at_line(std::size_t line) { return "line " + std::to_string(line); }

inline json parse_json_line(const std::string& line, std::size_t lineno) {
  try {
    json j = json::parse(line);
    if (!j.is_object()) throw Error(ErrorCode::parse, "record is not an object", at_line(lineno));
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("malformed record: ") + e.what(), at_line(lineno));
  }
}

inline std::string require_string(const json& j, const char* key, std::size_t lineno) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string())
    throw Error(ErrorCode::parse, std::string("missing string field '") + key + "'", at_line(lineno));
  return it->get<std::string>();
}

template <class F>
void for_each_json_line(std::istream& in, F&& f) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    f(parse_json_line(line, lineno), lineno);
  }
}

template <class F>
auto with_line(std::size_t lineno, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (!e.detail().empty()) throw;
    throw Error(e.code(), e.message(), at_line(lineno));
  }
}

}  // namespace detail

inline Entity entity_from_json(const json& j, std::size_t lineno = 0) {
  std::string kind_s = detail::require_string(j, "kind", lineno);
  auto kind = parse_entity_kind(kind_s);
  if (!kind) throw Error(ErrorCode::parse, "unknown entity kind '" + kind_s + "'", detail::at_line(lineno));
  Entity e{EntityId(detail::require_string(j, "id", lineno)), *kind,
           detail::require_string(j, "label", lineno), {}, std::nullopt};
  if (auto it = j.find("aliases"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw Error(ErrorCode::parse, "aliases must be an array", detail::at_line(lineno));
    for (const auto& a : *it) {
      if (!a.is_string()) throw Error(ErrorCode::parse, "alias must be a string", detail::at_line(lineno));
      e.aliases.push_back(a.get<std::string>());
    }
  }
  if (auto it = j.find("external_id"); it != j.end() && it->is_string()) e.external_id = it->get<std::string>();
  return e;
}

inline json entity_to_json(const Entity& e) {
  json j{{"id", e.id.str()}, {"kind", to_string(e.kind)}, {"label", e.label}, {"aliases", e.aliases}};
  if (e.external_id) j["external_id"] = *e.external_id;
  return j;
}

inline std::size_t load_entities(Store& store, std::istream& in) {
  std::size_t n = 0;
  detail::for_each_json_line(in, [&](const json& j, std::size_t lineno) {
    detail::with_line(lineno, [&] { store.add_entity(entity_from_json(j, lineno)); });
    ++n;
  });
  return n;
}

inline std::size_t load_entities(Store& store, const fs::path& path) {
  auto in = detail::open_input(path);
  return load_entities(store, in);
}

// Returns the number of statements actually added (after deduplication).
inline std::size_t load_statements(Store& store, std::istream& in) {
  csv::Reader reader(in);
  auto header = reader.next_nonblank();
  if (!header) return 0;
  const auto& h = header->fields;
  bool with_source = h.size() == 5 && h[4] == "source";
  if (!(h.size() >= 4 && h[0] == "subject" && h[1] == "predicate" && h[2] == "object" && h[3] == "graph") ||
      (h.size() == 5 && !with_source) || h.size() > 5)
    throw Error(ErrorCode::schema, "statements header must be subject,predicate,object,graph[,source]",
                detail::at_line(header->line));
  std::size_t added = 0;
  while (auto rec = reader.next_nonblank()) {
    detail::with_line(rec->line, [&] {
      const auto& f = rec->fields;
      if (f.size() != h.size())
        throw Error(ErrorCode::parse, "expected " + std::to_string(h.size()) + " fields, got " +
                                          std::to_string(f.size()));
      Statement s{EntityId(f[0]), require_predicate(f[1]), EntityId(f[2]), f[3], StatementSource::catalogue};
      if (with_source) {
        auto src = parse_statement_source(f[4]);
        if (!src) throw Error(ErrorCode::parse, "unknown statement source '" + f[4] + "'");
        s.source = *src;
      }
      if (store.add_statement(std::move(s))) ++added;
    });
  }
  return added;
}

inline std::size_t load_statements(Store& store, const fs::path& path) {
  auto in = detail::open_input(path);
  return load_statements(store, in);
}

// Returns the number of records read; later records for the same
// (entity, field) replace earlier ones.
inline std::size_t load_texts(Store& store, std::istream& in) {
  std::size_t n = 0;
  detail::for_each_json_line(in, [&](const json& j, std::size_t lineno) {
    std::string field_s = detail::require_string(j, "field", lineno);
    auto field = parse_text_field(field_s);
    if (!field) throw Error(ErrorCode::parse, "unknown text field '" + field_s + "'", detail::at_line(lineno));
    detail::with_line(lineno, [&] {
      store.set_text({EntityId(detail::require_string(j, "entity_id", lineno)), *field,
                      detail::require_string(j, "text", lineno)});
    });
    ++n;
  });
  return n;
}

inline std::size_t load_texts(Store& store, const fs::path& path) {
  auto in = detail::open_input(path);
  return load_texts(store, in);
}

inline std::vector<AnnotationRecord> load_annotations(std::istream& in, AnnotationTable table) {
  csv::Reader reader(in);
  auto header = reader.next_nonblank();
  if (!header) throw Error(ErrorCode::schema, "annotation file has no header row");
  const auto& expected = annotation_header(table);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header->fields.size(); ++i) {
    std::string name = header->fields[i];
    if (i == 0 && name.rfind("\xEF\xBB\xBF", 0) == 0) name.erase(0, 3);
    col[name] = i;
  }
  if (col.size() != expected.size() || header->fields.size() != expected.size())
    throw Error(ErrorCode::schema, "annotation header must list exactly the " + std::string(to_string(table)) +
                                       " column ids", detail::at_line(header->line));
  for (const auto& name : expected)
    if (!col.count(name))
      throw Error(ErrorCode::schema, "annotation header is missing column " + name, detail::at_line(header->line));

  std::vector<AnnotationRecord> out;
  while (auto rec = reader.next_nonblank()) {
    detail::with_line(rec->line, [&] {
      const auto& f = rec->fields;
      if (f.size() != expected.size())
        throw Error(ErrorCode::parse, "expected " + std::to_string(expected.size()) + " fields, got " +
                                          std::to_string(f.size()));
      auto cell = [&](const char* id) -> const std::string& { return f[col.at(id)]; };
      if (table == AnnotationTable::artists_periods) {
        AnnotationRecord r{table, EntityId(cell("A1")), EntityId(cell("A2")), EntityId(cell("A3")),
                           parse_label(cell("A4")),
                           {}, {}, {}, {}, {}, {}, {}, {}};
        r.recorded_in_one_bio = parse_label(cell("A5"));
        r.recorded_in_both_bios = parse_label(cell("A6"));
        r.collaborated_on_subject = parse_label(cell("A7"));
        r.h2_relevant_to_h1_archive = parse_label(cell("A8"));
        r.h2_mentioned_in_h1_archive = parse_label(cell("A9"));
        r.h1_relevant_to_h2_archive = parse_label(cell("A10"));
        r.h1_mentioned_in_h2_archive = parse_label(cell("A11"));
        out.push_back(std::move(r));
      } else {
        AnnotationRecord r{table, EntityId(cell("I1")), EntityId(cell("I2")), EntityId(cell("I3")),
                           parse_label(cell("I4")),
                           {}, {}, {}, {}, {}, {}, {}, {}};
        if (!cell("I5").empty()) r.relation_kind_note = cell("I5");
        out.push_back(std::move(r));
      }
    });
  }
  return out;
}

inline std::vector<AnnotationRecord> load_annotations(const fs::path& path, AnnotationTable table) {
  auto in = detail::open_input(path);
  return load_annotations(in, table);
}

inline std::size_t count_uncertain_labels(const std::vector<AnnotationRecord>& records) {
  std::size_t n = 0;
  for (auto r : records) r.for_each_label([&](Label& l) { n += l == Label::half; });
  return n;
}

// Uncertain (0.5) cells become 0.
inline std::vector<AnnotationRecord> normalize_labels(std::vector<AnnotationRecord> records) {
  for (auto& r : records)
    r.for_each_label([](Label& l) {
      if (l == Label::half) l = Label::zero;
    });
  return records;
}

inline std::vector<std::string> annotation_row(const AnnotationRecord& r) {
  auto opt = [](const std::optional<Label>& l) { return l ? to_string(*l) : std::string(); };
  if (r.table == AnnotationTable::artists_periods)
    return {r.art_hist_1.str(),
            r.art_hist_2.str(),
            r.shared_subject.str(),
            to_string(r.relation_exists),
            opt(r.recorded_in_one_bio),
            opt(r.recorded_in_both_bios),
            opt(r.collaborated_on_subject),
            opt(r.h2_relevant_to_h1_archive),
            opt(r.h2_mentioned_in_h1_archive),
            opt(r.h1_relevant_to_h2_archive),
            opt(r.h1_mentioned_in_h2_archive)};
  return {r.art_hist_1.str(), r.art_hist_2.str(), r.shared_subject.str(), to_string(r.relation_exists),
          r.relation_kind_note.value_or("")};
}

inline void write_annotations(std::ostream& out, AnnotationTable table, const std::vector<AnnotationRecord>& records) {
  csv::write_row(out, annotation_header(table));
  for (const auto& r : records) csv::write_row(out, annotation_row(r));
}

inline void write_entities(std::ostream& out, const Store& store) {
  for (const auto& [id, e] : store.entities()) out << entity_to_json(e).dump() << '\n';
}

inline void write_statements(std::ostream& out, const Store& store) {
  csv::write_row(out, {"subject", "predicate", "object", "graph", "source"});
  for (const auto& s : store.statements())
    csv::write_row(out, {s.subject.str(), std::string(to_string(s.predicate)), s.object.str(), s.graph,
                         std::string(to_string(s.source))});
}

inline void write_texts(std::ostream& out, const Store& store) {
  for (const auto& [k, r] : store.texts())
    out << json{{"entity_id", r.entity_id.str()}, {"field", to_string(r.field)}, {"text", r.text}}.dump() << '\n';
}

struct DumpManifest {
  fs::path entities_path;
  fs::path statements_path;
  std::optional<fs::path> texts_path;
  std::map<AnnotationTable, fs::path> annotations_paths;
  std::string format_version = "1";
};

// Relative paths resolve against the manifest's directory.
inline DumpManifest manifest_from_json(const json& j, const fs::path& base) {
  auto path_of = [&](const json& v, const char* what) {
    if (!v.is_string()) throw Error(ErrorCode::schema, std::string("manifest field '") + what + "' must be a path");
    fs::path p = v.get<std::string>();
    return p.is_absolute() ? p : base / p;
  };
  if (!j.is_object()) throw Error(ErrorCode::schema, "manifest must be an object");
  if (!j.contains("entities") || !j.contains("statements"))
    throw Error(ErrorCode::schema, "manifest needs 'entities' and 'statements'");
  DumpManifest m;
  m.entities_path = path_of(j["entities"], "entities");
  m.statements_path = path_of(j["statements"], "statements");
  if (j.contains("texts") && !j["texts"].is_null()) m.texts_path = path_of(j["texts"], "texts");
  if (j.contains("annotations")) {
    for (const auto& [k, v] : j["annotations"].items()) {
      auto t = parse_annotation_table(k);
      if (!t) throw Error(ErrorCode::schema, "unknown annotation table '" + k + "'");
      m.annotations_paths[*t] = path_of(v, "annotations");
    }
  }
  m.format_version = j.value("format_version", std::string("1"));
  if (m.format_version != "1") throw Error(ErrorCode::schema, "unsupported format_version " + m.format_version);
  auto check = [](const fs::path& p) {
    if (!fs::exists(p)) throw Error(ErrorCode::io, "manifest references missing file " + p.string());
  };
  check(m.entities_path);
  check(m.statements_path);
  if (m.texts_path) check(*m.texts_path);
  for (const auto& [t, p] : m.annotations_paths) check(p);
  return m;
}

inline DumpManifest load_manifest(const fs::path& path) {
  auto in = detail::open_input(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("malformed manifest: ") + e.what(), path.string());
  }
  return manifest_from_json(j, path.parent_path());
}

struct IngestResult {
  Store store;
  std::map<AnnotationTable, std::vector<AnnotationRecord>> annotations;  // normalized
  std::size_t entity_count = 0;
  std::size_t statement_count = 0;
  std::size_t text_count = 0;
  std::size_t uncertain_labels = 0;  // 0.5 cells replaced during normalization
};

inline IngestResult ingest(const DumpManifest& m) {
  IngestResult r;
  auto wrap = [](const fs::path& p, auto&& f) {
    try {
      return f();
    } catch (const Error& e) {
      throw Error(e.code(), e.message() + " (" + p.filename().string() + ")", e.detail());
    }
  };
  r.entity_count = wrap(m.entities_path, [&] { return load_entities(r.store, m.entities_path); });
  r.statement_count = wrap(m.statements_path, [&] { return load_statements(r.store, m.statements_path); });
  if (m.texts_path) r.text_count = wrap(*m.texts_path, [&] { return load_texts(r.store, *m.texts_path); });
  for (const auto& [table, path] : m.annotations_paths) {
    auto raw = wrap(path, [&] { return load_annotations(path, table); });
    r.uncertain_labels += count_uncertain_labels(raw);
    r.annotations[table] = normalize_labels(std::move(raw));
  }
  return r;
}

// Writes a re-ingestable snapshot (entities, statements, texts, manifest).
inline fs::path export_store(const Store& store, const fs::path& dir,
                             const std::map<AnnotationTable, std::vector<AnnotationRecord>>& annotations = {}) {
  fs::create_directories(dir);
  {
    auto out = detail::open_output(dir / "entities.jsonl");
    write_entities(out, store);
  }
  {
    auto out = detail::open_output(dir / "statements.csv");
    write_statements(out, store);
  }
  {
    auto out = detail::open_output(dir / "texts.jsonl");
    write_texts(out, store);
  }
  json manifest{{"format_version", "1"},
                {"entities", "entities.jsonl"},
                {"statements", "statements.csv"},
                {"texts", "texts.jsonl"}};
  for (const auto& [table, records] : annotations) {
    std::string name = std::string(to_string(table)) + ".csv";
    auto out = detail::open_output(dir / name);
    write_annotations(out, table, records);
    manifest["annotations"][std::string(to_string(table))] = name;
  }
  auto out = detail::open_output(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  return dir / "manifest.json";
}

}  // namespace relrec
