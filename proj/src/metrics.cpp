#include "mseqa/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include "json.hpp"
#include "mseqa/text.hpp"
#include "mseqa/tokenizer.hpp"

namespace mseqa {

std::string normalize_text(const std::string& s) {
  std::string kept;
  kept.reserve(s.size());
  for (char c : s) {
    const unsigned char u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || std::isspace(u) || u >= 0x80)
      kept += static_cast<char>(std::tolower(u));
  }
  std::string out;
  for (const auto& tok : split_ws(kept)) {
    if (tok == "a" || tok == "an" || tok == "the") continue;
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

static std::map<std::string, int> token_bag(const std::string& normalized) {
  std::map<std::string, int> bag;
  for (const auto& t : split_ws(normalized)) bag[t] += 1;
  return bag;
}

double f1_single(const std::string& pred, const std::string& gold) {
  const auto pb = token_bag(normalize_text(pred));
  const auto gb = token_bag(normalize_text(gold));
  size_t np = 0, ng = 0;
  for (const auto& [t, c] : pb) np += c;
  for (const auto& [t, c] : gb) ng += c;
  if (np == 0 && ng == 0) return 1.0;
  if (np == 0 || ng == 0) return 0.0;
  size_t same = 0;
  for (const auto& [t, c] : pb) {
    auto it = gb.find(t);
    if (it != gb.end()) same += std::min(c, it->second);
  }
  if (same == 0) return 0.0;
  const double p = static_cast<double>(same) / static_cast<double>(np);
  const double r = static_cast<double>(same) / static_cast<double>(ng);
  return 2.0 * p * r / (p + r);
}

int em_single(const std::string& pred, const std::string& gold) {
  return normalize_text(pred) == normalize_text(gold) ? 1 : 0;
}

MultiSpanScore multi_span_scores(const std::vector<std::string>& preds,
                                 const std::vector<std::string>& golds) {
  MultiSpanScore out;
  std::multiset<std::string> pn, gn;
  for (const auto& s : preds) pn.insert(normalize_text(s));
  for (const auto& s : golds) gn.insert(normalize_text(s));
  out.em = pn == gn ? 1 : 0;
  if (preds.empty() && golds.empty()) {
    out.f1 = 1.0;
    return out;
  }
  if (preds.empty() || golds.empty()) return out;

  const auto& small = preds.size() <= golds.size() ? preds : golds;
  const auto& large = preds.size() <= golds.size() ? golds : preds;
  const size_t ns = small.size(), nl = large.size();
  std::vector<std::vector<double>> score(nl, std::vector<double>(ns));
  for (size_t i = 0; i < nl; ++i)
    for (size_t j = 0; j < ns; ++j) score[i][j] = f1_single(large[i], small[j]);

  double best_sum = 0.0;
  if (ns <= 8) {
    // exact assignment: DP over large items x bitmask of small items used
    const size_t masks = size_t(1) << ns;
    std::vector<double> dp(masks, -1.0), next(masks, -1.0);
    dp[0] = 0.0;
    for (size_t i = 0; i < nl; ++i) {
      std::fill(next.begin(), next.end(), -1.0);
      for (size_t m = 0; m < masks; ++m) {
        if (dp[m] < 0) continue;
        next[m] = std::max(next[m], dp[m]);  // large item i unmatched
        for (size_t j = 0; j < ns; ++j) {
          if (m & (size_t(1) << j)) continue;
          const size_t m2 = m | (size_t(1) << j);
          next[m2] = std::max(next[m2], dp[m] + score[i][j]);
        }
      }
      dp.swap(next);
    }
    for (double v : dp) best_sum = std::max(best_sum, v);
  } else {
    // greedy by descending pairwise score
    std::vector<std::tuple<double, size_t, size_t>> pairs;
    for (size_t i = 0; i < nl; ++i)
      for (size_t j = 0; j < ns; ++j) pairs.emplace_back(score[i][j], i, j);
    std::sort(pairs.begin(), pairs.end(), std::greater<>());
    std::vector<bool> ul(nl, false), us(ns, false);
    for (const auto& [sc, i, j] : pairs) {
      if (ul[i] || us[j]) continue;
      ul[i] = us[j] = true;
      best_sum += sc;
    }
  }
  out.f1 = best_sum / static_cast<double>(std::max(preds.size(), golds.size()));
  return out;
}

Prf classifier_prf(const std::vector<int>& pred_labels, const std::vector<int>& gold_labels,
                   int positive_class) {
  if (pred_labels.size() != gold_labels.size())
    throw DataError("classifier_prf: label list length mismatch");
  size_t tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < pred_labels.size(); ++i) {
    const bool p = pred_labels[i] == positive_class;
    const bool g = gold_labels[i] == positive_class;
    if (p && g) ++tp;
    else if (p) ++fp;
    else if (g) ++fn;
  }
  Prf out;
  if (tp + fp > 0) out.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) out.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (out.precision + out.recall > 0)
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

namespace {

const char* length_bucket(size_t tokens) {
  if (tokens < 128) return "[0,128)";
  if (tokens < 256) return "[128,256)";
  if (tokens < 384) return "[256,384)";
  return "[384,512]";
}

bool kind_matches(Answer::Kind pred, AnswerKind gold) {
  return (pred == Answer::Kind::yes && gold == AnswerKind::yes) ||
         (pred == Answer::Kind::no_ && gold == AnswerKind::no_) ||
         (pred == Answer::Kind::unknown && gold == AnswerKind::unknown);
}

double pct(double x) { return std::round(x * 1000.0) / 10.0; }

}  // namespace

EvalReport evaluate(const Dataset& dataset, Split split, const Predictor& predictor) {
  std::map<std::string, const Passage*> by_id;
  std::map<std::string, size_t> passage_tokens;
  for (const auto& p : dataset.passages) by_id[p.id] = &p;

  EvalReport rep;
  double s_em = 0, s_f1 = 0, m_em = 0, m_f1 = 0;
  std::vector<int> ms_pred, ms_gold, at_pred, at_gold;
  std::map<int, std::pair<double, int>> span_count_acc;
  std::map<std::string, std::pair<double, int>> length_acc;
  size_t sel_tp = 0, sel_fp = 0, sel_fn = 0;

  for (const auto& qa : dataset.qapairs) {
    auto sit = dataset.split.find(qa.id);
    if (sit == dataset.split.end() || sit->second != split) continue;
    auto pit = by_id.find(qa.passage_id);
    if (pit == by_id.end()) throw DataError("evaluate: missing passage " + qa.passage_id);
    const Passage& passage = *pit->second;

    const Prediction pr = predictor(passage, qa);
    const bool gold_multi = qa.answer_kind == AnswerKind::multi_span;

    ms_pred.push_back(pr.pred_multi ? 1 : 0);
    ms_gold.push_back(gold_multi ? 1 : 0);
    if (qa.answer_kind == AnswerKind::yes || qa.answer_kind == AnswerKind::no_ ||
        qa.answer_kind == AnswerKind::unknown) {
      at_gold.push_back(qa.answer_kind == AnswerKind::yes ? 0
                        : qa.answer_kind == AnswerKind::no_ ? 1
                                                            : 2);
      at_pred.push_back(pr.pred_answer_type);
    }

    double em = 0, f1 = 0;
    if (gold_multi) {
      std::vector<std::string> golds, preds;
      for (const auto& g : qa.gold_spans) golds.push_back(g.text);
      for (const auto& g : pr.answer.spans) preds.push_back(g.text);
      const MultiSpanScore ms = multi_span_scores(preds, golds);
      em = ms.em;
      f1 = ms.f1;
      m_em += em;
      m_f1 += f1;
      rep.multi_span.n += 1;
      auto& acc = span_count_acc[static_cast<int>(qa.gold_spans.size())];
      acc.first += f1;
      acc.second += 1;

      std::set<int> pred_set(pr.selected_sentences.begin(), pr.selected_sentences.end());
      std::set<int> gold_set(qa.gold_sentence_ids.begin(), qa.gold_sentence_ids.end());
      for (int s : pred_set) (gold_set.count(s) ? sel_tp : sel_fp) += 1;
      for (int s : gold_set)
        if (!pred_set.count(s)) ++sel_fn;
    } else if (qa.answer_kind == AnswerKind::single_span) {
      const std::string& gold = qa.gold_spans.at(0).text;
      if (pr.answer.kind == Answer::Kind::span) {
        em = em_single(pr.answer.spans.at(0).text, gold);
        f1 = f1_single(pr.answer.spans.at(0).text, gold);
      } else if (pr.answer.kind == Answer::Kind::multi_span) {
        std::vector<std::string> preds;
        for (const auto& g : pr.answer.spans) preds.push_back(g.text);
        const MultiSpanScore ms = multi_span_scores(preds, {gold});
        em = ms.em;
        f1 = ms.f1;
      }
      s_em += em;
      s_f1 += f1;
      rep.single_span.n += 1;
    } else {
      em = f1 = kind_matches(pr.answer.kind, qa.answer_kind) ? 1.0 : 0.0;
      s_em += em;
      s_f1 += f1;
      rep.single_span.n += 1;
    }

    auto tk = passage_tokens.find(passage.id);
    if (tk == passage_tokens.end())
      tk = passage_tokens.emplace(passage.id, tokenize(passage.full_text).size()).first;
    auto& lacc = length_acc[length_bucket(tk->second)];
    lacc.first += f1;
    lacc.second += 1;
  }

  rep.n_examples = rep.single_span.n + rep.multi_span.n;
  if (rep.single_span.n) {
    rep.single_span.em = 100.0 * s_em / rep.single_span.n;
    rep.single_span.f1 = 100.0 * s_f1 / rep.single_span.n;
  }
  if (rep.multi_span.n) {
    rep.multi_span.em = 100.0 * m_em / rep.multi_span.n;
    rep.multi_span.f1 = 100.0 * m_f1 / rep.multi_span.n;
  }
  rep.overall.n = rep.n_examples;
  if (rep.n_examples) {
    rep.overall.em = 100.0 * (s_em + m_em) / rep.n_examples;
    rep.overall.f1 = 100.0 * (s_f1 + m_f1) / rep.n_examples;
  }
  for (const auto& [count, acc] : span_count_acc)
    rep.by_span_count[count] = 100.0 * acc.first / acc.second;
  for (const auto& [bucket, acc] : length_acc)
    rep.by_passage_length[bucket] = 100.0 * acc.first / acc.second;

  rep.multispan_classifier = classifier_prf(ms_pred, ms_gold, 1);
  Prf at_macro;
  int at_classes = 0;
  for (int c = 0; c < 3; ++c) {
    // macro-average only over classes that appear in gold or predictions
    bool present = false;
    for (size_t i = 0; i < at_gold.size(); ++i)
      if (at_gold[i] == c || at_pred[i] == c) {
        present = true;
        break;
      }
    if (!present) continue;
    const Prf p = classifier_prf(at_pred, at_gold, c);
    at_macro.precision += p.precision;
    at_macro.recall += p.recall;
    at_macro.f1 += p.f1;
    ++at_classes;
  }
  if (at_classes) {
    at_macro.precision /= at_classes;
    at_macro.recall /= at_classes;
    at_macro.f1 /= at_classes;
  }
  rep.answer_type_classifier = at_macro;
  if (sel_tp + sel_fp > 0)
    rep.sentence_selection.precision =
        static_cast<double>(sel_tp) / static_cast<double>(sel_tp + sel_fp);
  if (sel_tp + sel_fn > 0)
    rep.sentence_selection.recall =
        static_cast<double>(sel_tp) / static_cast<double>(sel_tp + sel_fn);
  if (rep.sentence_selection.precision + rep.sentence_selection.recall > 0)
    rep.sentence_selection.f1 = 2.0 * rep.sentence_selection.precision *
                                rep.sentence_selection.recall /
                                (rep.sentence_selection.precision + rep.sentence_selection.recall);
  return rep;
}

std::string EvalReport::to_json() const {
  using nlohmann::json;
  auto cat = [](const CategoryScore& c) {
    return json{{"em", std::round(c.em * 10.0) / 10.0},
                {"f1", std::round(c.f1 * 10.0) / 10.0},
                {"n", c.n}};
  };
  auto prf = [](const Prf& p) {
    return json{{"precision", pct(p.precision)}, {"recall", pct(p.recall)}, {"f1", pct(p.f1)}};
  };
  json by_count = json::object();
  for (const auto& [k, v] : by_span_count)
    by_count[std::to_string(k)] = std::round(v * 10.0) / 10.0;
  json by_len = json::object();
  for (const auto& [k, v] : by_passage_length) by_len[k] = std::round(v * 10.0) / 10.0;
  return json{{"single_span", cat(single_span)},
              {"multi_span", cat(multi_span)},
              {"overall", cat(overall)},
              {"by_span_count", by_count},
              {"by_passage_length", by_len},
              {"multispan_classifier", prf(multispan_classifier)},
              {"answer_type_classifier", prf(answer_type_classifier)},
              {"sentence_selection", prf(sentence_selection)},
              {"n_examples", n_examples}}
      .dump(2);
}

Predictor model_predictor(const Model& model, const DecodeConfig& cfg) {
  return [&model, cfg](const Passage& passage, const QAPair& qa) {
    return predict(model, passage, qa.question, cfg);
  };
}

Predictor identity_oracle() {
  return [](const Passage& passage, const QAPair& qa) {
    (void)passage;
    Prediction pr;
    pr.pred_multi = qa.answer_kind == AnswerKind::multi_span;
    pr.p_s = pr.pred_multi ? std::array<float, 2>{0.0f, 1.0f} : std::array<float, 2>{1.0f, 0.0f};
    switch (qa.answer_kind) {
      case AnswerKind::single_span:
        pr.answer.kind = Answer::Kind::span;
        pr.answer.spans = qa.gold_spans;
        break;
      case AnswerKind::multi_span:
        pr.answer.kind = Answer::Kind::multi_span;
        pr.answer.spans = qa.gold_spans;
        pr.selected_sentences = qa.gold_sentence_ids;
        break;
      case AnswerKind::yes:
        pr.answer.kind = Answer::Kind::yes;
        pr.pred_answer_type = 0;
        break;
      case AnswerKind::no_:
        pr.answer.kind = Answer::Kind::no_;
        pr.pred_answer_type = 1;
        break;
      case AnswerKind::unknown:
        pr.answer.kind = Answer::Kind::unknown;
        pr.pred_answer_type = 2;
        break;
    }
    pr.answer.confidence = 1.0;
    return pr;
  };
}

}  // namespace mseqa
