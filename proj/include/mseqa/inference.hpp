#ifndef MSEQA_INFERENCE_HPP
#define MSEQA_INFERENCE_HPP

#include <array>
#include <string>
#include <vector>

#include "mseqa/corpus.hpp"
#include "mseqa/heads.hpp"
#include "mseqa/model.hpp"

namespace mseqa {

struct DecodeConfig {
  int max_answer_tokens = 30;
  double tagger_threshold = 0.5;
  int max_sentences = 26;

  void validate() const {
    if (max_answer_tokens < 1) throw ConfigError("decode: max_answer_tokens must be >= 1");
    if (tagger_threshold <= 0.0 || tagger_threshold >= 1.0)
      throw ConfigError("decode: tagger_threshold must be in (0,1)");
    if (max_sentences < 1) throw ConfigError("decode: max_sentences must be >= 1");
  }
};

struct Answer {
  enum class Kind { span, yes, no_, unknown, multi_span };
  Kind kind = Kind::unknown;
  std::vector<GoldSpan> spans;  // full-text coordinates, sorted by position
  double confidence = 0.0;
};

std::string answer_kind_label(Answer::Kind k);

// Block-3 decoding: best constrained (start, end) span in log space against
// the CLS anchor; the answer-type head breaks the CLS case into yes/no/unknown.
Answer decode_single(const SpanDistributions<float>& dists, const std::array<float, 3>& p_a,
                     const Encoding& enc, const std::string& context_text,
                     const DecodeConfig& cfg);

// Block-4 decoding: sentences whose tag probability clears the threshold, in
// document order; falls back to the single best sentence.
Answer decode_multi(const std::vector<std::array<float, 2>>& sentence_tags,
                    const Passage& passage, const DecodeConfig& cfg);

// Everything the eval harness needs from one routed pass.
struct Prediction {
  Answer answer;
  bool pred_multi = false;              // Eq-1 argmax
  std::array<float, 2> p_s{0.5f, 0.5f};
  int pred_answer_type = -1;            // Eq-2 argmax (always computed)
  std::vector<int> selected_sentences;  // tagger path only
};

Prediction predict(const Model& model, const Passage& passage, const std::string& question,
                   const DecodeConfig& cfg);

// The Fig-3 routed pipeline.
Answer answer(const Model& model, const Passage& passage, const std::string& question,
              const DecodeConfig& cfg);

}  // namespace mseqa

#endif
