#include "mseqa/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "mseqa/text.hpp"
#include "mseqa/training.hpp"

namespace mseqa {

std::string answer_kind_label(Answer::Kind k) {
  switch (k) {
    case Answer::Kind::span: return "span";
    case Answer::Kind::yes: return "yes";
    case Answer::Kind::no_: return "no";
    case Answer::Kind::unknown: return "unknown";
    case Answer::Kind::multi_span: return "multi_span";
  }
  return "?";
}

Answer decode_single(const SpanDistributions<float>& dists, const std::array<float, 3>& p_a,
                     const Encoding& enc, const std::string& context_text,
                     const DecodeConfig& cfg) {
  cfg.validate();
  const int T = enc.length();
  auto is_context = [&](int t) {
    return enc.segment_ids[t] == 1 && enc.attention_mask[t] == 1 &&
           !(enc.offsets[t].first == 0 && enc.offsets[t].second == 0);
  };

  double best = -std::numeric_limits<double>::infinity();
  int best_i = -1, best_j = -1;
  for (int i = 0; i < T; ++i) {
    if (!is_context(i)) continue;
    const double ls = std::log(static_cast<double>(dists.p_start[i]));
    for (int j = i; j < T && j - i < cfg.max_answer_tokens; ++j) {
      if (!is_context(j)) continue;
      const double score = ls + std::log(static_cast<double>(dists.p_end[j]));
      if (score > best) {  // strict: ties keep the smaller (i, j)
        best = score;
        best_i = i;
        best_j = j;
      }
    }
  }

  const double cls_score = std::log(static_cast<double>(dists.p_start[0])) +
                           std::log(static_cast<double>(dists.p_end[0]));
  Answer ans;
  if (best_i < 0 || cls_score >= best) {
    const int at = static_cast<int>(std::max_element(p_a.begin(), p_a.end()) - p_a.begin());
    ans.kind = at == 0 ? Answer::Kind::yes : at == 1 ? Answer::Kind::no_ : Answer::Kind::unknown;
    ans.confidence = p_a[at];
    return ans;
  }
  ans.kind = Answer::Kind::span;
  GoldSpan g;
  g.char_start = enc.offsets[best_i].first;
  g.char_end = enc.offsets[best_j].second;
  g.text = utf8_substr(context_text, g.char_start, g.char_end);
  ans.spans.push_back(std::move(g));
  ans.confidence = std::exp(best);
  return ans;
}

Answer decode_multi(const std::vector<std::array<float, 2>>& sentence_tags,
                    const Passage& passage, const DecodeConfig& cfg) {
  cfg.validate();
  if (passage.sentences.empty()) throw DataError("decode_multi: empty passage");
  const size_t n = std::min(sentence_tags.size(), passage.sentences.size());

  std::vector<int> selected;
  int argmax = 0;
  for (size_t i = 0; i < n; ++i) {
    if (sentence_tags[i][1] >= cfg.tagger_threshold) selected.push_back(static_cast<int>(i));
    if (sentence_tags[i][1] > sentence_tags[argmax][1]) argmax = static_cast<int>(i);
  }
  if (selected.empty()) selected.push_back(argmax);

  Answer ans;
  ans.kind = Answer::Kind::multi_span;
  double conf = 1.0;
  for (int i : selected) {
    GoldSpan g;
    g.char_start = passage.sentence_offsets[i];
    g.char_end = g.char_start + static_cast<int>(utf8_length(passage.sentences[i].text));
    g.text = passage.sentences[i].text;
    ans.spans.push_back(std::move(g));
    conf *= sentence_tags[i][1];
  }
  ans.confidence = conf;
  return ans;
}

Prediction predict(const Model& model, const Passage& passage, const std::string& question,
                   const DecodeConfig& cfg) {
  cfg.validate();
  if (question.empty()) throw DataError("predict: empty question");

  Prediction pr;
  const Encoding enc = encode_pair(model.vocab, question, passage.full_text);
  const Mat<float> H = encode(model.params, model.config, enc, false, 0);
  const Vec<float> h_cls = H.row(0).transpose();

  pr.p_s = predict_multispan(h_cls, model.params);
  pr.pred_multi = pr.p_s[1] > pr.p_s[0];
  const std::array<float, 3> p_a = predict_answer_type(h_cls, model.params);
  pr.pred_answer_type =
      static_cast<int>(std::max_element(p_a.begin(), p_a.end()) - p_a.begin());

  if (!pr.pred_multi) {
    const SpanDistributions<float> dists = span_logits(H, model.params, enc.attention_mask);
    pr.answer = decode_single(dists, p_a, enc, passage.full_text, cfg);
    return pr;
  }

  const size_t n = std::min<size_t>(cfg.max_sentences, passage.sentences.size());
  if (passage.sentences.size() > static_cast<size_t>(cfg.max_sentences))
    std::fprintf(stderr, "warning: passage %s has %zu sentences; tagging only the first %d\n",
                 passage.id.c_str(), passage.sentences.size(), cfg.max_sentences);
  std::vector<std::array<float, 2>> tags;
  for (size_t i = 0; i < n; ++i) {
    const Encoding senc = encode_sentence_pair(model.vocab, question, passage.sentences[i].text);
    const Mat<float> Hs = encode(model.params, model.config, senc, false, 0);
    const auto [qr, sr] = detail::tagger_pool_ranges(senc);
    tags.push_back(tag_sentence(pool(Hs, qr.first, qr.second), pool(Hs, sr.first, sr.second),
                                model.params));
  }
  pr.answer = decode_multi(tags, passage, cfg);
  for (const auto& g : pr.answer.spans) {
    for (size_t i = 0; i < passage.sentence_offsets.size(); ++i)
      if (passage.sentence_offsets[i] == g.char_start)
        pr.selected_sentences.push_back(static_cast<int>(i));
  }
  return pr;
}

Answer answer(const Model& model, const Passage& passage, const std::string& question,
              const DecodeConfig& cfg) {
  return predict(model, passage, question, cfg).answer;
}

}  // namespace mseqa
