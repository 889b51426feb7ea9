// Writes a small synthetic catalogue dump: historians, their topics and
// institutions, one archive each, short texts and fully annotated tables.
//
//   relrec_make_demo <out-dir> [seed]

#include <iostream>
#include <random>
#include <set>

#include "relrec/relrec.hpp"

using namespace relrec;

namespace {

const std::vector<std::string> historian_names{
    "Anna Bellini",   "Carlo Rossi",     "Dora Verdi",     "Elena Neri",      "Fabio Conti",
    "Giulia Marchi",  "Luca Ferraro",    "Marta Galli",    "Nicola Serra",    "Paola Fontana",
    "Renato Greco",   "Silvia Lombardi", "Tommaso Riva",   "Vera Moretti",    "Bruno Testa",
    "Chiara Barbieri"};

const std::vector<std::string> topic_names{"Baroque sculpture",   "Etruscan bronzes", "Venetian drawing",
                                           "Romanesque churches", "Flemish painting", "Renaissance medals"};

const std::vector<std::string> institution_names{"Kunsthistorisches Institut in Florenz", "Bibliotheca Hertziana",
                                                 "Scuola Normale Superiore", "Warburg Institute"};

std::string hid(std::size_t i) { return "H" + std::to_string(i + 1); }

Label lbl(bool v) { return v ? Label::one : Label::zero; }

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: relrec_make_demo <out-dir> [seed]\n";
    return 2;
  }
  std::mt19937_64 rng(argc > 2 ? std::stoull(argv[2]) : 7);
  std::bernoulli_distribution coin(0.5);
  auto chance = [&](double p) { return std::bernoulli_distribution(p)(rng); };

  Store s;
  const std::size_t n = historian_names.size();
  for (std::size_t t = 0; t < topic_names.size(); ++t)
    s.add_entity({EntityId("T" + std::to_string(t + 1)), EntityKind::topic, topic_names[t], {}, std::nullopt});
  for (std::size_t i = 0; i < institution_names.size(); ++i)
    s.add_entity(
        {EntityId("I" + std::to_string(i + 1)), EntityKind::institution, institution_names[i], {}, std::nullopt});

  std::vector<std::set<std::size_t>> topics(n), insts(n);
  std::uniform_int_distribution<std::size_t> pick_t(0, topic_names.size() - 1), pick_i(0, institution_names.size() - 1);
  for (std::size_t h = 0; h < n; ++h) {
    const auto& name = historian_names[h];
    std::string surname = name.substr(name.find(' ') + 1);
    s.add_entity({EntityId(hid(h)), EntityKind::historian, name, {name.substr(0, 1) + ". " + surname}, std::nullopt});
    s.add_entity({EntityId("C" + std::to_string(h + 1)), EntityKind::collection, "Fondo " + surname, {},
                  std::nullopt});
    s.add_statement({EntityId(hid(h)), Predicate::produced, EntityId("C" + std::to_string(h + 1)), "catalogue",
                     StatementSource::catalogue});
    // Topic holdings cluster around a home topic so that overlap carries signal.
    topics[h].insert(h % topic_names.size());
    while (topics[h].size() < 1 + h % 3) topics[h].insert(chance(0.6) ? (h + 1) % topic_names.size() : pick_t(rng));
    if (chance(0.8)) insts[h].insert(h % institution_names.size());
    if (chance(0.3)) insts[h].insert(pick_i(rng));
    for (auto t : topics[h])
      s.add_statement({EntityId(hid(h)), Predicate::subject, EntityId("T" + std::to_string(t + 1)), "catalogue",
                       StatementSource::catalogue});
    for (auto i : insts[h])
      s.add_statement({EntityId(hid(h)), Predicate::subject, EntityId("I" + std::to_string(i + 1)), "catalogue",
                       StatementSource::catalogue});
  }

  // Latent ties: more likely with more shared topics and a shared institution.
  std::map<std::pair<std::size_t, std::size_t>, bool> tie, in_bio_of_a, in_bio_of_b, in_arch_of_a, in_arch_of_b;
  std::vector<std::vector<std::size_t>> bio_mentions(n), arch_mentions(n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      std::size_t st = 0, si = 0;
      for (auto t : topics[a]) st += topics[b].count(t);
      for (auto i : insts[a]) si += insts[b].count(i);
      if (st + si == 0) continue;
      double p = 0.15 + 0.2 * double(st) + 0.25 * double(si);
      bool t = chance(std::min(p, 0.9));
      tie[{a, b}] = t;
      in_bio_of_a[{a, b}] = t && chance(0.45);
      in_bio_of_b[{a, b}] = t && chance(0.25);
      in_arch_of_a[{a, b}] = t && chance(0.3);
      in_arch_of_b[{a, b}] = t && chance(0.2);
      if (in_bio_of_a[{a, b}]) bio_mentions[a].push_back(b);
      if (in_bio_of_b[{a, b}]) bio_mentions[b].push_back(a);
      if (in_arch_of_a[{a, b}]) arch_mentions[a].push_back(b);
      if (in_arch_of_b[{a, b}]) arch_mentions[b].push_back(a);
    }

  const std::vector<std::string> openings{"studied in Rome and Florence", "taught art history at Pisa",
                                          "worked for the regional heritage office", "trained as a restorer"};
  for (std::size_t h = 0; h < n; ++h) {
    std::string bio = historian_names[h] + " " + openings[h % openings.size()] + ", writing mainly on " +
                      topic_names[*topics[h].begin()] + ".";
    for (auto o : bio_mentions[h]) bio += " A long correspondence with " + historian_names[o] + " followed.";
    s.set_text({EntityId(hid(h)), TextField::biography, bio});
    std::string desc = "Letters, photographs and notebooks.";
    for (auto o : arch_mentions[h]) desc += " Includes offprints sent by " + historian_names[o] + ".";
    s.set_text({EntityId("C" + std::to_string(h + 1)), TextField::description, desc});
  }

  std::vector<AnnotationRecord> topic_rows, inst_rows;
  for (const auto& row : expand_topic_pairs(s).rows) {
    std::size_t a = std::stoul(row.pair.first.str().substr(1)) - 1, b = std::stoul(row.pair.second.str().substr(1)) - 1;
    auto key = std::minmax(a, b);
    bool t = tie[key];
    AnnotationRecord r{AnnotationTable::artists_periods, row.pair.first, row.pair.second, row.shared_subject,
                       lbl(t), {}, {}, {}, {}, {}, {}, {}, {}};
    bool bio_a = in_bio_of_a[key], bio_b = in_bio_of_b[key];
    if (a > b) std::swap(bio_a, bio_b);
    r.recorded_in_one_bio = lbl(bio_a || bio_b);
    r.recorded_in_both_bios = lbl(bio_a && bio_b);
    r.collaborated_on_subject = t && coin(rng) ? Label::one : (t && chance(0.1) ? Label::half : Label::zero);
    bool arch_a = in_arch_of_a[key], arch_b = in_arch_of_b[key];
    if (a > b) std::swap(arch_a, arch_b);
    r.h2_mentioned_in_h1_archive = lbl(arch_a);
    r.h1_mentioned_in_h2_archive = lbl(arch_b);
    // Archives tend to hold papers of the people named in the owner's biography.
    r.h2_relevant_to_h1_archive = lbl(arch_a || (bio_a && chance(0.7)) || (t && chance(0.1)));
    r.h1_relevant_to_h2_archive = lbl(arch_b || (bio_b && chance(0.7)) || (t && chance(0.1)));
    topic_rows.push_back(r);
  }
  for (const auto& row : expand_institution_pairs(s).rows) {
    std::size_t a = std::stoul(row.pair.first.str().substr(1)) - 1, b = std::stoul(row.pair.second.str().substr(1)) - 1;
    bool t = tie[std::minmax(a, b)];
    AnnotationRecord r{AnnotationTable::institutions, row.pair.first, row.pair.second, row.shared_subject,
                       lbl(t), {}, {}, {}, {}, {}, {}, {}, {}};
    if (t) r.relation_kind_note = coin(rng) ? "colleagues" : "teacher and student";
    inst_rows.push_back(r);
  }

  auto manifest = export_store(s, argv[1],
                               {{AnnotationTable::artists_periods, topic_rows}, {AnnotationTable::institutions, inst_rows}});
  std::cout << manifest.string() << '\n';
  return 0;
}
