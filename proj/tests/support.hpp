#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "relrec/relrec.hpp"

namespace relrec::testing {

namespace fs = std::filesystem;

inline fs::path temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  auto dir = fs::temp_directory_path() /
             ("relrec_" + tag + "_" + std::to_string(stamp) + "_" + std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

inline void put(Store& s, const std::string& id, EntityKind kind, const std::string& label,
                std::vector<std::string> aliases = {}) {
  s.add_entity({EntityId(id), kind, label, std::move(aliases), std::nullopt});
}

inline void link(Store& s, const std::string& a, Predicate p, const std::string& b,
                 const std::string& graph = "catalogue") {
  s.add_statement({EntityId(a), p, EntityId(b), graph, StatementSource::catalogue});
}

// Three historians, two topics, one institution, one collection each.
// H1 and H2 share T1 and I1; H3 holds T2 alone. H1's biography names H2.
inline Store fixture_f1() {
  Store s;
  put(s, "H1", EntityKind::historian, "Anna Bellini");
  put(s, "H2", EntityKind::historian, "Carlo Rossi", {"C. Rossi"});
  put(s, "H3", EntityKind::historian, "Dora Verdi");
  put(s, "T1", EntityKind::topic, "Baroque sculpture");
  put(s, "T2", EntityKind::topic, "Etruscan bronzes");
  put(s, "I1", EntityKind::institution, "Istituto di Storia dell'Arte");
  put(s, "C1", EntityKind::collection, "Fondo Bellini");
  put(s, "C2", EntityKind::collection, "Fondo Rossi");
  put(s, "C3", EntityKind::collection, "Fondo Verdi");
  link(s, "H1", Predicate::subject, "T1");
  link(s, "H2", Predicate::subject, "T1");
  link(s, "H3", Predicate::subject, "T2");
  link(s, "H1", Predicate::subject, "I1");
  link(s, "H2", Predicate::subject, "I1");
  link(s, "H1", Predicate::produced, "C1");
  link(s, "H2", Predicate::produced, "C2");
  link(s, "H3", Predicate::produced, "C3");
  s.set_text({EntityId("H1"), TextField::biography,
              "Anna Bellini studied in Rome, where she met Carlo Rossi and worked on Baroque sculpture."});
  s.set_text({EntityId("H2"), TextField::biography, "Carlo Rossi taught at the Istituto for thirty years."});
  s.set_text({EntityId("C1"), TextField::description, "Letters, photographs and notes on Roman churches."});
  return s;
}

inline AnnotationRecord topic_annotation(const std::string& a, const std::string& b, const std::string& subject,
                                         Label valid, Label bio_one = Label::zero, Label on_subject = Label::zero) {
  AnnotationRecord r{AnnotationTable::artists_periods, EntityId(a), EntityId(b), EntityId(subject), valid,
                     {}, {}, {}, {}, {}, {}, {}, {}};
  r.recorded_in_one_bio = bio_one;
  r.recorded_in_both_bios = Label::zero;
  r.collaborated_on_subject = on_subject;
  r.h2_relevant_to_h1_archive = Label::zero;
  r.h2_mentioned_in_h1_archive = Label::zero;
  r.h1_relevant_to_h2_archive = Label::zero;
  r.h1_mentioned_in_h2_archive = Label::zero;
  return r;
}

inline AnnotationRecord inst_annotation(const std::string& a, const std::string& b, const std::string& inst,
                                        Label valid) {
  return {AnnotationTable::institutions, EntityId(a), EntityId(b), EntityId(inst), valid,
          {}, {}, {}, {}, {}, {}, {}, {}};
}

inline std::string hid(std::size_t i) { return "H" + std::to_string(i); }
inline std::string tid(std::size_t i) { return "T" + std::to_string(i); }
inline std::string iid(std::size_t i) { return "I" + std::to_string(i); }

struct RandomStore {
  Store store;
  std::size_t historians = 0;
  std::size_t topics = 0;
  std::size_t institutions = 0;
  // membership[h][t] for topics, then institutions
  std::vector<std::vector<bool>> topic_of;
  std::vector<std::vector<bool>> inst_of;
};

// Random catalogue with up to `max_h` historians; ids are inserted in a
// shuffled order so nothing depends on insertion order.
inline RandomStore random_store(std::mt19937_64& rng, std::size_t max_h = 10) {
  RandomStore r;
  std::uniform_int_distribution<std::size_t> nh(0, max_h), nt(0, 5), ni(0, 4);
  std::bernoulli_distribution coin(0.4);
  r.historians = nh(rng);
  r.topics = nt(rng);
  r.institutions = ni(rng);
  for (std::size_t h = 0; h < r.historians; ++h) put(r.store, hid(h), EntityKind::historian, "Historian " + hid(h));
  for (std::size_t t = 0; t < r.topics; ++t) put(r.store, tid(t), EntityKind::topic, "Topic " + tid(t));
  for (std::size_t i = 0; i < r.institutions; ++i)
    put(r.store, iid(i), EntityKind::institution, "Institution " + iid(i));
  r.topic_of.assign(r.historians, std::vector<bool>(r.topics));
  r.inst_of.assign(r.historians, std::vector<bool>(r.institutions));
  std::vector<Statement> st;
  for (std::size_t h = 0; h < r.historians; ++h) {
    for (std::size_t t = 0; t < r.topics; ++t)
      if ((r.topic_of[h][t] = coin(rng)))
        st.push_back({EntityId(hid(h)), Predicate::subject, EntityId(tid(t)), "catalogue", StatementSource::catalogue});
    for (std::size_t i = 0; i < r.institutions; ++i)
      if ((r.inst_of[h][i] = coin(rng)))
        st.push_back({EntityId(hid(h)), Predicate::subject, EntityId(iid(i)), "catalogue", StatementSource::catalogue});
  }
  std::shuffle(st.begin(), st.end(), rng);
  for (auto& s : st) r.store.add_statement(s);
  return r;
}

// Writes a dump directory with a manifest and returns the manifest path.
inline fs::path write_dump(const Store& store, const fs::path& dir,
                           const std::map<AnnotationTable, std::vector<AnnotationRecord>>& annotations = {}) {
  return export_store(store, dir, annotations);
}

}  // namespace relrec::testing
