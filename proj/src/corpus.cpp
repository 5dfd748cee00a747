#include "mseqa/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mseqa/errors.hpp"
#include "mseqa/text.hpp"

namespace mseqa {

using nlohmann::json;

// ---------------------------------------------------------------------------
// catalog & config
// ---------------------------------------------------------------------------

void SlotCatalog::validate() const {
  auto check = [](const std::vector<std::string>& v, const char* what) {
    if (v.empty()) throw ConfigError(std::string("catalog: empty list: ") + what);
    std::set<std::string> seen(v.begin(), v.end());
    if (seen.size() != v.size())
      throw ConfigError(std::string("catalog: duplicate entries in ") + what);
  };
  check(persons, "persons");
  check(locations, "locations");
  check(activities, "activities");
  check(emotions, "emotions");
  check(utterances, "utterances");
  if (time_grid.empty()) throw ConfigError("catalog: empty time_grid");
  std::set<int> seen(time_grid.begin(), time_grid.end());
  if (seen.size() != time_grid.size()) throw ConfigError("catalog: duplicate time_grid entries");
  for (int t : time_grid)
    if (t < 0 || t > 1439) throw ConfigError("catalog: time_grid value out of [0,1439]");
}

SlotCatalog default_catalog() {
  SlotCatalog c;
  c.persons = {"Jenny", "Bob", "Alice", "Tom", "Maria", "David", "Sara", "Kevin",
               "Linda", "Omar", "Priya", "Hugo"};
  c.locations = {"kitchen", "bedroom", "bathroom", "garage",
                 "backyard", "hallway", "balcony", "garden"};
  c.activities = {"exercising", "reading", "cooking", "napping",
                  "painting", "stretching", "vacuuming", "knitting",
                  "studying", "gardening", "baking", "drawing"};
  c.emotions = {"happy", "tired", "excited", "calm", "stressed", "bored"};
  c.utterances = {"turn off the lights", "play some jazz",      "set a timer for ten minutes",
                  "what is the weather", "lock the front door", "turn up the heating"};
  for (int h = 5; h <= 23; ++h) c.time_grid.push_back(h * 60);
  return c;
}

void GenConfig::validate() const {
  if (n_passages < 0) throw ConfigError("gen: n_passages must be >= 0");
  if (sentences_per_passage.lo < 1 || sentences_per_passage.hi < sentences_per_passage.lo)
    throw ConfigError("gen: sentences_per_passage range empty");
  if (sentences_per_passage.hi > 26) throw ConfigError("gen: sentences_per_passage.hi > 26");
  if (fraction_boolean < 0 || fraction_unknown < 0 ||
      fraction_boolean + fraction_unknown > 1.0)
    throw ConfigError("gen: fractions must be >= 0 and sum to <= 1 with the span fraction");
  if (multi_span_min_events < 2) throw ConfigError("gen: multi_span_min_events must be >= 2");
  if (questions_per_passage < 0) throw ConfigError("gen: questions_per_passage must be >= 0");
}

bool GenConfig::family_enabled(const std::string& f) const {
  if (question_families_enabled.empty()) return true;
  return std::find(question_families_enabled.begin(), question_families_enabled.end(), f) !=
         question_families_enabled.end();
}

std::string answer_kind_name(AnswerKind k) {
  switch (k) {
    case AnswerKind::single_span: return "single_span";
    case AnswerKind::multi_span: return "multi_span";
    case AnswerKind::yes: return "yes";
    case AnswerKind::no_: return "no";
    case AnswerKind::unknown: return "unknown";
  }
  return "?";
}

AnswerKind answer_kind_from_name(const std::string& s) {
  if (s == "single_span") return AnswerKind::single_span;
  if (s == "multi_span") return AnswerKind::multi_span;
  if (s == "yes") return AnswerKind::yes;
  if (s == "no") return AnswerKind::no_;
  if (s == "unknown") return AnswerKind::unknown;
  throw DataError("unknown answer kind: " + s);
}

std::string split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "?";
}

static Split split_from_name(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "validation") return Split::validation;
  if (s == "test") return Split::test;
  throw DataError("unknown split: " + s);
}

std::string render_time(int minutes) {
  const int h = minutes / 60;
  const int m = minutes % 60;
  int h12 = h % 12;
  if (h12 == 0) h12 = 12;
  const char* ap = h < 12 ? "am" : "pm";
  std::ostringstream os;
  os << h12;
  if (m != 0) {
    os << ':';
    if (m < 10) os << '0';
    os << m;
  }
  os << ' ' << ap;
  return os.str();
}

// ---------------------------------------------------------------------------
// passage generation
// ---------------------------------------------------------------------------

namespace {

// Appends pieces while tracking scalar offsets for slot provenance.
struct SentenceBuilder {
  std::string text;
  size_t scalar_len = 0;
  std::map<std::string, SlotSpan> slots;

  void lit(const std::string& s) {
    text += s;
    scalar_len += utf8_length(s);
  }
  void slot(const std::string& name, const std::string& value) {
    SlotSpan sp;
    sp.value = value;
    sp.char_start = static_cast<int>(scalar_len);
    lit(value);
    sp.char_end = static_cast<int>(scalar_len);
    slots.emplace(name, sp);
  }
};

SentenceRecord make_sentence(const std::string& kind, int timestamp, const std::string& person,
                             const std::string& location, const std::string& payload) {
  SentenceBuilder b;
  b.lit("At ");
  b.slot("time", render_time(timestamp));
  b.lit(", ");
  b.slot("person", person);
  if (kind == "activity") {
    b.lit(" was ");
    b.slot("activity", payload);
  } else if (kind == "emotion") {
    b.lit(" was feeling ");
    b.slot("emotion", payload);
  } else {
    b.lit(" said \"");
    b.slot("utterance", payload);
    b.lit("\"");
  }
  b.lit(" in ");
  b.slot("location", location);
  b.lit(".");
  SentenceRecord s;
  s.template_id = kind + "_v1";
  s.text = std::move(b.text);
  s.timestamp = timestamp;
  s.slots = std::move(b.slots);
  return s;
}

}  // namespace

Passage generate_passage(uint64_t seed, const SlotCatalog& catalog, const GenConfig& cfg) {
  catalog.validate();
  cfg.validate();
  Rng rng(seed);

  const int lo = cfg.sentences_per_passage.lo;
  const int hi = cfg.sentences_per_passage.hi;
  const int n = lo + static_cast<int>(rng.next_below(static_cast<uint64_t>(hi - lo + 1)));

  // Distinct, sorted timestamps when the grid allows; sorted with repeats
  // otherwise.
  std::vector<int> times;
  if (static_cast<size_t>(n) <= catalog.time_grid.size()) {
    std::vector<int> grid = catalog.time_grid;
    rng.shuffle(grid);
    times.assign(grid.begin(), grid.begin() + n);
  } else {
    for (int i = 0; i < n; ++i) times.push_back(rng.pick(catalog.time_grid));
  }
  std::sort(times.begin(), times.end());

  // A cast of persons per passage, drawn from the leading part of the person
  // catalog; the trailing quarter is reserved for questions about people the
  // log never records (negative booleans), and the rest of the leading part
  // supplies absent entities for unknown questions.
  std::vector<std::string> cast(catalog.persons.begin(),
                                catalog.persons.end() - catalog.persons.size() / 4);
  rng.shuffle(cast);
  const size_t cast_size = std::min<size_t>(cast.size(), 4 + rng.next_below(3));
  cast.resize(std::max<size_t>(1, cast_size));

  Passage p;
  p.id = "p" + std::to_string(seed);
  size_t full_scalar_len = 0;
  for (int i = 0; i < n; ++i) {
    const std::string& person = rng.pick(cast);
    const std::string& location = rng.pick(catalog.locations);
    const double r = rng.next_real();
    SentenceRecord s;
    if (r < 0.60) {
      s = make_sentence("activity", times[i], person, location, rng.pick(catalog.activities));
    } else if (r < 0.80) {
      s = make_sentence("emotion", times[i], person, location, rng.pick(catalog.emotions));
    } else {
      s = make_sentence("utterance", times[i], person, location, rng.pick(catalog.utterances));
    }
    if (i > 0) {
      p.full_text += " ";
      full_scalar_len += 1;
    }
    p.sentence_offsets.push_back(static_cast<int>(full_scalar_len));
    p.full_text += s.text;
    full_scalar_len += utf8_length(s.text);
    p.sentences.push_back(std::move(s));
  }
  return p;
}

GoldSpan derive_gold_span(const SentenceRecord& sentence, const std::string& slot_name,
                          int passage_offset) {
  auto it = sentence.slots.find(slot_name);
  if (it == sentence.slots.end())
    throw DataError("derive_gold_span: slot not present: " + slot_name);
  GoldSpan g;
  g.char_start = passage_offset + it->second.char_start;
  g.char_end = passage_offset + it->second.char_end;
  g.text = it->second.value;
  return g;
}

// ---------------------------------------------------------------------------
// question generation
// ---------------------------------------------------------------------------

namespace {

struct SentView {
  int idx;
  const SentenceRecord* s;
  std::string kind;  // activity | emotion | utterance
  std::string person, location, time_text;
  int ts;
};

const char* daypart_name(int minutes) {
  if (minutes < 720) return "morning";
  if (minutes < 1080) return "afternoon";
  return "evening";
}

QAPair span_qa(const Passage& p, std::string question, std::string family,
               std::vector<std::pair<int, std::string>> sentence_slots) {
  QAPair qa;
  qa.passage_id = p.id;
  qa.question = std::move(question);
  qa.family = std::move(family);
  std::sort(sentence_slots.begin(), sentence_slots.end());
  for (const auto& [idx, slot] : sentence_slots) {
    qa.gold_spans.push_back(derive_gold_span(p.sentences[idx], slot, p.sentence_offsets[idx]));
    qa.gold_sentence_ids.push_back(idx);
  }
  qa.answer_kind = qa.gold_spans.size() >= 2 ? AnswerKind::multi_span : AnswerKind::single_span;
  return qa;
}

QAPair flat_qa(const Passage& p, std::string question, std::string family, AnswerKind kind) {
  QAPair qa;
  qa.passage_id = p.id;
  qa.question = std::move(question);
  qa.family = std::move(family);
  qa.answer_kind = kind;
  return qa;
}

}  // namespace

std::vector<QAPair> generate_questions(const Passage& passage, uint64_t seed,
                                       const SlotCatalog& catalog, const GenConfig& cfg) {
  Rng rng(seed);
  const Passage& p = passage;

  std::vector<SentView> views;
  for (size_t i = 0; i < p.sentences.size(); ++i) {
    const SentenceRecord& s = p.sentences[i];
    SentView v;
    v.idx = static_cast<int>(i);
    v.s = &s;
    v.kind = s.template_id.substr(0, s.template_id.find('_'));
    v.person = s.slots.at("person").value;
    v.location = s.slots.at("location").value;
    v.time_text = s.slots.at("time").value;
    v.ts = s.timestamp;
    views.push_back(v);
  }

  auto count_if = [&](auto pred) {
    int c = 0;
    for (const auto& v : views)
      if (pred(v)) ++c;
    return c;
  };

  std::vector<QAPair> single_pool, multi_pool, bool_pool, unknown_pool;

  // ---- single-span candidates ----
  for (const auto& v : views) {
    const bool pt_unique =
        count_if([&](const SentView& w) { return w.person == v.person && w.ts == v.ts; }) == 1;
    if (pt_unique && cfg.family_enabled("where")) {
      single_pool.push_back(span_qa(p, "Where was " + v.person + " at " + v.time_text + "?",
                                    "where", {{v.idx, "location"}}));
    }
    const bool lt_unique = count_if([&](const SentView& w) {
                             return w.location == v.location && w.ts == v.ts;
                           }) == 1;
    if (lt_unique && cfg.family_enabled("who")) {
      single_pool.push_back(span_qa(p, "Who was in " + v.location + " at " + v.time_text + "?",
                                    "who", {{v.idx, "person"}}));
    }
    if (v.kind == "activity") {
      if (pt_unique && cfg.family_enabled("what")) {
        single_pool.push_back(span_qa(p, "What was " + v.person + " doing at " + v.time_text + "?",
                                      "what", {{v.idx, "activity"}}));
      }
      const std::string& act = v.s->slots.at("activity").value;
      const bool pa_unique = count_if([&](const SentView& w) {
                               return w.person == v.person && w.kind == "activity" &&
                                      w.s->slots.at("activity").value == act;
                             }) == 1;
      if (pa_unique && cfg.family_enabled("when")) {
        single_pool.push_back(
            span_qa(p, "When was " + v.person + " " + act + "?", "when", {{v.idx, "time"}}));
      }
    } else if (v.kind == "emotion") {
      if (pt_unique && cfg.family_enabled("emotion")) {
        single_pool.push_back(span_qa(
            p, "What emotion was " + v.person + " feeling at " + v.time_text + "?", "emotion",
            {{v.idx, "emotion"}}));
      }
    } else if (v.kind == "utterance") {
      if (pt_unique && cfg.family_enabled("what")) {
        single_pool.push_back(span_qa(p, "What did " + v.person + " say at " + v.time_text + "?",
                                      "what", {{v.idx, "utterance"}}));
      }
    }
  }

  // ---- multi-span candidates (activity events; one sub-span per sentence) --
  const int min_ev = std::max(2, cfg.multi_span_min_events);
  std::set<std::string> emitted;  // question-text dedup across candidate loops
  auto add_events = [&](const std::string& question, const std::string& family,
                        auto pred) {
    if (!cfg.family_enabled(family)) return;
    if (emitted.count(question)) return;
    std::vector<std::pair<int, std::string>> matches;
    for (const auto& v : views)
      if (v.kind == "activity" && pred(v)) matches.emplace_back(v.idx, "activity");
    if (static_cast<int>(matches.size()) >= min_ev) {
      emitted.insert(question);
      multi_pool.push_back(span_qa(p, question, family, matches));
    }
  };

  for (const auto& v : views) {
    const std::string dp = daypart_name(v.ts);
    add_events("What happened in " + v.location + " in the " + dp + "?", "what",
               [&](const SentView& w) {
                 return w.location == v.location && daypart_name(w.ts) == dp;
               });
    add_events("What did " + v.person + " do today?", "what",
               [&](const SentView& w) { return w.person == v.person; });
    add_events("What did " + v.person + " do in " + v.location + "?", "what",
               [&](const SentView& w) {
                 return w.person == v.person && w.location == v.location;
               });
  }
  for (const auto& v : views) {
    for (const auto& pivot : views) {
      add_events("What did " + v.person + " do before " + pivot.time_text + "?", "before",
                 [&](const SentView& w) { return w.person == v.person && w.ts < pivot.ts; });
      add_events("What did " + v.person + " do after " + pivot.time_text + "?", "after",
                 [&](const SentView& w) { return w.person == v.person && w.ts > pivot.ts; });
    }
  }

  // The trailing quarter of the person catalog is never cast in any passage
  // (see generate_passage); those names feed negative booleans. Cast-eligible
  // persons missing from this particular passage feed unknown questions.
  const size_t n_reserved = catalog.persons.size() / 4;
  std::vector<std::string> reserved(catalog.persons.end() - n_reserved, catalog.persons.end());
  std::set<std::string> cast;
  for (const auto& v : views) cast.insert(v.person);
  std::vector<std::string> absent;
  for (size_t i = 0; i + n_reserved < catalog.persons.size(); ++i)
    if (!cast.count(catalog.persons[i])) absent.push_back(catalog.persons[i]);
  if (reserved.empty()) reserved = absent;  // tiny catalogs: fall back

  // ---- boolean candidates ----
  // The passage is a closed-world activity log: a "yes" restates a recorded
  // event, a "no" asks the same frame about a person the log never records.
  for (const auto& v : views) {
    const std::string* noname = reserved.empty() ? nullptr : &rng.pick(reserved);
    if (cfg.family_enabled("was_is")) {
      bool_pool.push_back(flat_qa(p, "Was " + v.person + " in " + v.location + " at " +
                                         v.time_text + "?",
                                  "was_is", AnswerKind::yes));
      if (noname) {
        bool_pool.push_back(flat_qa(p, "Was " + *noname + " in " + v.location + " at " +
                                           v.time_text + "?",
                                    "was_is", AnswerKind::no_));
      }
      if (v.kind == "emotion") {
        const std::string& emo = v.s->slots.at("emotion").value;
        bool_pool.push_back(flat_qa(
            p, "Was " + v.person + " feeling " + emo + " at " + v.time_text + "?", "was_is",
            AnswerKind::yes));
        if (noname) {
          bool_pool.push_back(flat_qa(p, "Was " + *noname + " feeling " + emo + " at " +
                                             v.time_text + "?",
                                      "was_is", AnswerKind::no_));
        }
      }
    }
    if (cfg.family_enabled("did")) {
      bool_pool.push_back(flat_qa(p, "Did " + v.person + " visit " + v.location + "?", "did",
                                  AnswerKind::yes));
      if (noname) {
        bool_pool.push_back(flat_qa(p, "Did " + *noname + " visit " + v.location + "?", "did",
                                    AnswerKind::no_));
      }
      if (v.kind == "utterance") {
        const std::string& utt = v.s->slots.at("utterance").value;
        bool_pool.push_back(flat_qa(p, "Did " + v.person + " say \"" + utt + "\"?", "did",
                                    AnswerKind::yes));
        if (noname) {
          bool_pool.push_back(flat_qa(p, "Did " + *noname + " say \"" + utt + "\"?", "did",
                                      AnswerKind::no_));
        }
      }
    }
  }

  // ---- unknown candidates (entities absent from this passage) ----
  if (!absent.empty()) {
    for (const auto& v : views) {
      const std::string& a = rng.pick(absent);
      if (cfg.family_enabled("where"))
        unknown_pool.push_back(flat_qa(p, "Where was " + a + " at " + v.time_text + "?", "where",
                                       AnswerKind::unknown));
      if (cfg.family_enabled("what"))
        unknown_pool.push_back(flat_qa(p, "What was " + rng.pick(absent) + " doing at " +
                                              v.time_text + "?",
                                       "what", AnswerKind::unknown));
    }
  }
  std::set<std::string> done_activities;
  for (const auto& v : views)
    if (v.kind == "activity") done_activities.insert(v.s->slots.at("activity").value);
  for (const auto& person : cast) {
    if (!cfg.family_enabled("when")) break;
    for (int tries = 0; tries < 8; ++tries) {
      const std::string& act = rng.pick(catalog.activities);
      if (!done_activities.count(act)) {
        unknown_pool.push_back(
            flat_qa(p, "When was " + person + " " + act + "?", "when", AnswerKind::unknown));
        break;
      }
    }
  }

  rng.shuffle(single_pool);
  rng.shuffle(multi_pool);
  rng.shuffle(bool_pool);
  rng.shuffle(unknown_pool);

  // Draw questions by category fraction, falling back when a pool runs dry.
  std::set<std::string> used;
  size_t si = 0, mi = 0, bi = 0, ui = 0;
  auto pop = [&](std::vector<QAPair>& pool, size_t& at) -> QAPair* {
    while (at < pool.size()) {
      QAPair* qa = &pool[at++];
      if (used.insert(qa->question).second) return qa;
    }
    return nullptr;
  };

  std::vector<QAPair> out;
  for (int q = 0; q < cfg.questions_per_passage; ++q) {
    const double r = rng.next_real();
    const bool want_multi = rng.next_bernoulli(0.5);
    QAPair* qa = nullptr;
    if (r < cfg.fraction_boolean) {
      qa = pop(bool_pool, bi);
    } else if (r < cfg.fraction_boolean + cfg.fraction_unknown) {
      qa = pop(unknown_pool, ui);
    } else if (want_multi) {
      qa = pop(multi_pool, mi);
    }
    if (!qa) qa = pop(single_pool, si);
    if (!qa) qa = pop(multi_pool, mi);
    if (!qa) qa = pop(bool_pool, bi);
    if (!qa) qa = pop(unknown_pool, ui);
    if (!qa) break;
    QAPair copy = *qa;
    copy.id = "q_" + p.id + "_" + std::to_string(out.size());
    out.push_back(std::move(copy));
  }
  return out;
}

// ---------------------------------------------------------------------------
// dataset assembly
// ---------------------------------------------------------------------------

Dataset build_dataset(const SlotCatalog& catalog, const GenConfig& cfg) {
  catalog.validate();
  cfg.validate();
  Rng base(cfg.seed);

  Dataset ds;
  for (int i = 0; i < cfg.n_passages; ++i) {
    const uint64_t pass_seed = base.child(2 * static_cast<uint64_t>(i) + 2).next_u64();
    const uint64_t q_seed = base.child(2 * static_cast<uint64_t>(i) + 3).next_u64();
    Passage p = generate_passage(pass_seed, catalog, cfg);
    p.id = "p" + std::to_string(i);
    std::vector<QAPair> qas = generate_questions(p, q_seed, catalog, cfg);
    for (size_t j = 0; j < qas.size(); ++j) {
      qas[j].passage_id = p.id;
      qas[j].id = "q" + std::to_string(i) + "_" + std::to_string(j);
      ds.qapairs.push_back(std::move(qas[j]));
    }
    ds.passages.push_back(std::move(p));
  }

  // 80:12:8 split by QAPair, rounded to nearest with train as remainder.
  const size_t n = ds.qapairs.size();
  const size_t n_val = static_cast<size_t>(std::llround(0.12 * static_cast<double>(n)));
  const size_t n_test = static_cast<size_t>(std::llround(0.08 * static_cast<double>(n)));
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng split_rng = base.child(1);
  split_rng.shuffle(order);
  for (size_t k = 0; k < n; ++k) {
    Split s = Split::train;
    if (k >= n - n_test) s = Split::test;
    else if (k >= n - n_test - n_val) s = Split::validation;
    ds.split[ds.qapairs[order[k]].id] = s;
  }
  return ds;
}

std::map<std::string, int> question_prefix_stats(const Dataset& dataset) {
  std::map<std::string, int> out;
  for (const auto& qa : dataset.qapairs) {
    const std::vector<std::string> toks = split_ws(to_lower_ascii(qa.question));
    std::string key;
    for (size_t i = 0; i < toks.size() && i < 3; ++i) {
      if (i) key += " ";
      key += toks[i];
    }
    out[key] += 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSONL serialization
// ---------------------------------------------------------------------------

json gen_config_to_json(const GenConfig& cfg) {
  return json{{"seed", cfg.seed},
              {"n_passages", cfg.n_passages},
              {"sentences_per_passage", {cfg.sentences_per_passage.lo, cfg.sentences_per_passage.hi}},
              {"question_families_enabled", cfg.question_families_enabled},
              {"fraction_boolean", cfg.fraction_boolean},
              {"fraction_unknown", cfg.fraction_unknown},
              {"multi_span_min_events", cfg.multi_span_min_events},
              {"questions_per_passage", cfg.questions_per_passage}};
}

static json passage_to_json(const Passage& p) {
  json sentences = json::array();
  for (const auto& s : p.sentences) {
    json slots = json::object();
    for (const auto& [name, sp] : s.slots)
      slots[name] = json::array({sp.value, sp.char_start, sp.char_end});
    sentences.push_back(json{{"template_id", s.template_id},
                             {"text", s.text},
                             {"timestamp", s.timestamp},
                             {"slots", slots}});
  }
  return json{{"kind", "passage"},
              {"id", p.id},
              {"full_text", p.full_text},
              {"sentence_offsets", p.sentence_offsets},
              {"sentences", sentences}};
}

static json qa_to_json(const QAPair& qa, Split split) {
  json spans = json::array();
  for (const auto& g : qa.gold_spans)
    spans.push_back(json::array({g.char_start, g.char_end, g.text}));
  return json{{"kind", "qa"},
              {"id", qa.id},
              {"passage_id", qa.passage_id},
              {"question", qa.question},
              {"family", qa.family},
              {"answer_kind", answer_kind_name(qa.answer_kind)},
              {"gold_spans", spans},
              {"gold_sentence_ids", qa.gold_sentence_ids},
              {"split", split_name(split)}};
}

void save_dataset_jsonl(const Dataset& ds, const GenConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << json{{"kind", "header"}, {"version", 1}, {"config", gen_config_to_json(cfg)}}.dump()
      << "\n";
  for (const auto& p : ds.passages) out << passage_to_json(p).dump() << "\n";
  for (const auto& qa : ds.qapairs) {
    auto it = ds.split.find(qa.id);
    if (it == ds.split.end()) throw DataError("qa without split assignment: " + qa.id);
    out << qa_to_json(qa, it->second).dump() << "\n";
  }
}

static Passage passage_from_json(const json& j) {
  Passage p;
  p.id = j.at("id").get<std::string>();
  p.full_text = j.at("full_text").get<std::string>();
  p.sentence_offsets = j.at("sentence_offsets").get<std::vector<int>>();
  for (const auto& sj : j.at("sentences")) {
    SentenceRecord s;
    s.template_id = sj.at("template_id").get<std::string>();
    s.text = sj.at("text").get<std::string>();
    s.timestamp = sj.at("timestamp").get<int>();
    for (auto it = sj.at("slots").begin(); it != sj.at("slots").end(); ++it) {
      SlotSpan sp;
      sp.value = it.value().at(0).get<std::string>();
      sp.char_start = it.value().at(1).get<int>();
      sp.char_end = it.value().at(2).get<int>();
      s.slots.emplace(it.key(), sp);
    }
    p.sentences.push_back(std::move(s));
  }
  return p;
}

static QAPair qa_from_json(const json& j, Split* split_out) {
  QAPair qa;
  qa.id = j.at("id").get<std::string>();
  qa.passage_id = j.at("passage_id").get<std::string>();
  qa.question = j.at("question").get<std::string>();
  qa.family = j.at("family").get<std::string>();
  qa.answer_kind = answer_kind_from_name(j.at("answer_kind").get<std::string>());
  for (const auto& sj : j.at("gold_spans")) {
    GoldSpan g;
    g.char_start = sj.at(0).get<int>();
    g.char_end = sj.at(1).get<int>();
    g.text = sj.at(2).get<std::string>();
    qa.gold_spans.push_back(std::move(g));
  }
  qa.gold_sentence_ids = j.at("gold_sentence_ids").get<std::vector<int>>();
  *split_out = split_from_name(j.at("split").get<std::string>());
  return qa;
}

Dataset load_dataset_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  Dataset ds;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const std::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": parse error: " + e.what());
    }
    const std::string kind = j.value("kind", "");
    if (kind == "header") continue;
    if (kind == "passage") {
      ds.passages.push_back(passage_from_json(j));
    } else if (kind == "qa") {
      Split s;
      QAPair qa = qa_from_json(j, &s);
      ds.split[qa.id] = s;
      ds.qapairs.push_back(std::move(qa));
    } else {
      throw DataError(path + ":" + std::to_string(lineno) + ": unknown record kind: " + kind);
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// validation
// ---------------------------------------------------------------------------

std::vector<std::string> validate_dataset(const std::string& path) {
  std::vector<std::string> violations;
  Dataset ds;
  try {
    ds = load_dataset_jsonl(path);
  } catch (const std::exception& e) {
    violations.push_back(e.what());
    return violations;
  }
  auto bad = [&](const std::string& id, const std::string& msg) {
    violations.push_back(id + ": " + msg);
  };

  std::map<std::string, const Passage*> by_id;
  for (const auto& p : ds.passages) {
    by_id[p.id] = &p;
    if (p.sentences.empty() || p.sentences.size() > 26)
      bad(p.id, "sentence count out of [1,26]");
    if (p.sentence_offsets.size() != p.sentences.size())
      bad(p.id, "sentence_offsets size mismatch");
    for (size_t i = 0; i + 1 < p.sentence_offsets.size(); ++i)
      if (p.sentence_offsets[i] >= p.sentence_offsets[i + 1])
        bad(p.id, "sentence_offsets not strictly increasing");
    for (size_t i = 0; i + 1 < p.sentences.size(); ++i)
      if (p.sentences[i].timestamp > p.sentences[i + 1].timestamp)
        bad(p.id, "timestamps decrease at sentence " + std::to_string(i + 1));
    const size_t full_len = utf8_length(p.full_text);
    for (size_t i = 0; i < p.sentences.size() && i < p.sentence_offsets.size(); ++i) {
      const SentenceRecord& s = p.sentences[i];
      const size_t off = static_cast<size_t>(p.sentence_offsets[i]);
      const size_t slen = utf8_length(s.text);
      if (off + slen > full_len ||
          utf8_substr(p.full_text, off, off + slen) != s.text) {
        bad(p.id, "full_text does not begin with sentence " + std::to_string(i) + " at offset");
      }
      std::vector<std::pair<int, int>> ranges;
      for (const auto& [name, sp] : s.slots) {
        if (sp.char_start < 0 || sp.char_end < sp.char_start ||
            static_cast<size_t>(sp.char_end) > slen) {
          bad(p.id, "slot " + name + " range out of sentence bounds");
          continue;
        }
        if (utf8_substr(s.text, sp.char_start, sp.char_end) != sp.value)
          bad(p.id, "slot " + name + " text mismatch");
        ranges.emplace_back(sp.char_start, sp.char_end);
      }
      std::sort(ranges.begin(), ranges.end());
      for (size_t k = 0; k + 1 < ranges.size(); ++k)
        if (ranges[k].second > ranges[k + 1].first) bad(p.id, "overlapping slot ranges");
    }
  }

  for (const auto& qa : ds.qapairs) {
    auto it = by_id.find(qa.passage_id);
    if (it == by_id.end()) {
      bad(qa.id, "references missing passage " + qa.passage_id);
      continue;
    }
    const Passage& p = *it->second;
    const size_t n_spans = qa.gold_spans.size();
    switch (qa.answer_kind) {
      case AnswerKind::single_span:
        if (n_spans != 1) bad(qa.id, "single_span must have exactly 1 gold span");
        break;
      case AnswerKind::multi_span:
        if (n_spans < 2) bad(qa.id, "multi_span must have >= 2 gold spans");
        break;
      default:
        if (n_spans != 0) bad(qa.id, "boolean/unknown must have no gold spans");
        break;
    }
    const size_t full_len = utf8_length(p.full_text);
    for (const auto& g : qa.gold_spans) {
      if (g.char_start < 0 || g.char_end < g.char_start ||
          static_cast<size_t>(g.char_end) > full_len) {
        bad(qa.id, "gold span out of passage bounds");
        continue;
      }
      if (utf8_substr(p.full_text, g.char_start, g.char_end) != g.text)
        bad(qa.id, "gold span text mismatch at [" + std::to_string(g.char_start) + "," +
                       std::to_string(g.char_end) + ")");
    }
    if (!std::is_sorted(qa.gold_sentence_ids.begin(), qa.gold_sentence_ids.end()))
      bad(qa.id, "gold_sentence_ids not sorted");
    if (qa.answer_kind == AnswerKind::multi_span) {
      std::set<int> distinct(qa.gold_sentence_ids.begin(), qa.gold_sentence_ids.end());
      if (distinct.size() != qa.gold_sentence_ids.size())
        bad(qa.id, "gold_sentence_ids not distinct");
    }
    if (qa.gold_sentence_ids.size() == qa.gold_spans.size()) {
      for (size_t k = 0; k < qa.gold_spans.size(); ++k) {
        const int sid = qa.gold_sentence_ids[k];
        if (sid < 0 || static_cast<size_t>(sid) >= p.sentences.size()) {
          bad(qa.id, "gold sentence id out of range");
          continue;
        }
        const int lo = p.sentence_offsets[sid];
        const int hi = lo + static_cast<int>(utf8_length(p.sentences[sid].text));
        if (qa.gold_spans[k].char_start < lo || qa.gold_spans[k].char_end > hi)
          bad(qa.id, "gold span escapes its sentence range");
      }
    } else if (!qa.gold_spans.empty()) {
      bad(qa.id, "gold_sentence_ids count differs from gold_spans count");
    }
  }

  // split ratio 80:12:8 within +-1
  size_t n_train = 0, n_val = 0, n_test = 0;
  for (const auto& qa : ds.qapairs) {
    auto it = ds.split.find(qa.id);
    if (it == ds.split.end()) {
      bad(qa.id, "missing split assignment");
      continue;
    }
    if (it->second == Split::train) ++n_train;
    else if (it->second == Split::validation) ++n_val;
    else ++n_test;
  }
  const double n = static_cast<double>(ds.qapairs.size());
  if (n > 0) {
    if (std::abs(static_cast<double>(n_val) - 0.12 * n) > 1.0)
      violations.push_back("split: validation count deviates from 12% by more than 1");
    if (std::abs(static_cast<double>(n_test) - 0.08 * n) > 1.0)
      violations.push_back("split: test count deviates from 8% by more than 1");
    if (std::abs(static_cast<double>(n_train) - 0.80 * n) > 1.0)
      violations.push_back("split: train count deviates from 80% by more than 1");
  }
  return violations;
}

}  // namespace mseqa
