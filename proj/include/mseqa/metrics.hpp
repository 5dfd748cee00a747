#ifndef MSEQA_METRICS_HPP
#define MSEQA_METRICS_HPP

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mseqa/corpus.hpp"
#include "mseqa/inference.hpp"

namespace mseqa {

// Lowercase, drop a/an/the as whole tokens, strip punctuation, collapse
// whitespace. Idempotent.
std::string normalize_text(const std::string& s);

// Token-bag F1 after normalization; both empty -> 1, exactly one empty -> 0.
double f1_single(const std::string& pred, const std::string& gold);

// 1 iff the normalized strings are equal.
int em_single(const std::string& pred, const std::string& gold);

// Multi-span aggregation: EM is normalized-multiset equality; F1 is the best
// one-to-one alignment score over max(|preds|, |golds|). Exact (Hungarian via
// permutations) when the smaller side has <= 8 entries, greedy beyond that.
struct MultiSpanScore {
  int em = 0;
  double f1 = 0.0;
};
MultiSpanScore multi_span_scores(const std::vector<std::string>& preds,
                                 const std::vector<std::string>& golds);

struct Prf {
  double precision = 0, recall = 0, f1 = 0;
};

// Standard precision/recall/F1 for one positive class; zero denominators
// yield 0.
Prf classifier_prf(const std::vector<int>& pred_labels, const std::vector<int>& gold_labels,
                   int positive_class);

struct CategoryScore {
  double em = 0, f1 = 0;  // percentages in [0,100]
  int n = 0;
};

struct EvalReport {
  CategoryScore single_span, multi_span, overall;
  std::map<int, double> by_span_count;        // |gold spans| -> F1 percent
  std::map<std::string, double> by_passage_length;  // bucket label -> F1 percent
  Prf multispan_classifier;           // Eq-1 argmax vs gold, positive = multi
  Prf answer_type_classifier;         // Eq-2 argmax vs gold, macro over 3 classes
  Prf sentence_selection;             // micro P/R/F1 vs gold_sentence_ids
  int n_examples = 0;

  std::string to_json() const;        // 1-decimal percentages
};

// One routed prediction per example; lets the eval harness run either the
// model or an oracle.
using Predictor = std::function<Prediction(const Passage&, const QAPair&)>;

EvalReport evaluate(const Dataset& dataset, Split split, const Predictor& predictor);

// Predictor backed by a trained checkpoint.
Predictor model_predictor(const Model& model, const DecodeConfig& cfg);

// Feeds the gold annotations back as predictions; scores 100 everywhere.
Predictor identity_oracle();

}  // namespace mseqa

#endif
