#ifndef MSEQA_CORPUS_HPP
#define MSEQA_CORPUS_HPP

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mseqa/rng.hpp"

namespace mseqa {

// Slot values the sentence templates draw from.
struct SlotCatalog {
  std::vector<std::string> persons;
  std::vector<std::string> locations;
  std::vector<std::string> activities;   // "-ing" phrases
  std::vector<std::string> emotions;
  std::vector<int> time_grid;            // minutes since midnight, 0-1439
  std::vector<std::string> utterances;   // assistant commands

  void validate() const;  // throws ConfigError on violation
};

SlotCatalog default_catalog();

struct SlotSpan {
  std::string value;
  int char_start = 0;  // scalar offsets, relative to the sentence text
  int char_end = 0;
};

struct SentenceRecord {
  std::string template_id;
  std::string text;
  int timestamp = 0;  // minutes since midnight
  std::map<std::string, SlotSpan> slots;
};

struct Passage {
  std::string id;
  std::vector<SentenceRecord> sentences;
  std::vector<int> sentence_offsets;  // char_start of each sentence in full_text
  std::string full_text;
};

enum class AnswerKind { single_span, multi_span, yes, no_, unknown };

std::string answer_kind_name(AnswerKind k);
AnswerKind answer_kind_from_name(const std::string& s);

struct GoldSpan {
  int char_start = 0;  // full-text scalar offsets
  int char_end = 0;
  std::string text;
};

struct QAPair {
  std::string id;
  std::string passage_id;
  std::string question;
  std::string family;  // who|what|when|where|did|was_is|before|after|emotion
  AnswerKind answer_kind = AnswerKind::single_span;
  std::vector<GoldSpan> gold_spans;
  std::vector<int> gold_sentence_ids;
};

enum class Split { train, validation, test };

std::string split_name(Split s);

struct Dataset {
  std::vector<Passage> passages;
  std::vector<QAPair> qapairs;
  std::map<std::string, Split> split;  // qapair id -> split
};

struct Range {
  int lo = 1;
  int hi = 1;
};

struct GenConfig {
  uint64_t seed = 0;
  int n_passages = 500;
  Range sentences_per_passage{4, 8};
  std::vector<std::string> question_families_enabled;  // empty = all
  double fraction_boolean = 0.20;
  double fraction_unknown = 0.15;
  int multi_span_min_events = 2;
  int questions_per_passage = 20;

  void validate() const;
  bool family_enabled(const std::string& f) const;
};

// Minutes since midnight -> "6 am" / "6:30 pm".
std::string render_time(int minutes);

Passage generate_passage(uint64_t seed, const SlotCatalog& catalog, const GenConfig& cfg);

std::vector<QAPair> generate_questions(const Passage& passage, uint64_t seed,
                                       const SlotCatalog& catalog, const GenConfig& cfg);

// Lift a sentence-local slot span into full-text coordinates.
GoldSpan derive_gold_span(const SentenceRecord& sentence, const std::string& slot_name,
                          int passage_offset);

Dataset build_dataset(const SlotCatalog& catalog, const GenConfig& cfg);

// First three whitespace tokens of each question, lowercased.
std::map<std::string, int> question_prefix_stats(const Dataset& dataset);

// ---- JSONL serialization -------------------------------------------------

void save_dataset_jsonl(const Dataset& ds, const GenConfig& cfg, const std::string& path);
Dataset load_dataset_jsonl(const std::string& path);

// Re-checks every Passage/QAPair invariant including substring integrity.
// Returns one human-readable line per violation; empty on a valid file.
std::vector<std::string> validate_dataset(const std::string& path);

}  // namespace mseqa

#endif
