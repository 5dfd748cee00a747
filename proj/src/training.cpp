#include "mseqa/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "json.hpp"

namespace mseqa {

double lr_schedule(long long step, long long total_steps, const TrainingConfig& cfg) {
  if (total_steps <= 0) throw ConfigError("lr_schedule: total_steps must be positive");
  if (step < 0 || step > total_steps) throw ConfigError("lr_schedule: step out of range");
  const long long warmup = std::max<long long>(
      1, static_cast<long long>(std::ceil(cfg.warmup_fraction * static_cast<double>(total_steps))));
  if (step <= warmup)
    return cfg.lr_peak * static_cast<double>(step) / static_cast<double>(warmup);
  return cfg.lr_peak * static_cast<double>(total_steps - step) /
         static_cast<double>(total_steps - warmup);
}

SupervisionRecord build_supervision(const QAPair& qa, const Encoding& enc, int n_sentences,
                                    bool tag_from_single) {
  SupervisionRecord sup;
  sup.multispan_label = qa.answer_kind == AnswerKind::multi_span;
  switch (qa.answer_kind) {
    case AnswerKind::single_span: {
      const GoldSpan& g = qa.gold_spans.at(0);
      sup.start_end = char_span_to_token_span(enc, {g.char_start, g.char_end});
      break;
    }
    case AnswerKind::yes:
    case AnswerKind::no_:
    case AnswerKind::unknown:
      sup.start_end = std::make_pair(0, 0);  // the CLS anchor
      sup.answer_type_label = qa.answer_kind == AnswerKind::yes ? 0
                              : qa.answer_kind == AnswerKind::no_ ? 1
                                                                  : 2;
      break;
    case AnswerKind::multi_span: {
      sup.sentence_labels.assign(n_sentences, 0);
      int positives = 0;
      for (int sid : qa.gold_sentence_ids) {
        if (sid < n_sentences) {
          sup.sentence_labels[sid] = 1;
          ++positives;
        }
      }
      if (positives < 2)
        throw UnmappableSpanError("multi-span example " + qa.id +
                                  " lost its gold sentences to the sentence cap");
      break;
    }
  }
  if (tag_from_single && qa.answer_kind != AnswerKind::multi_span) {
    // Auxiliary tagger supervision: the answer-bearing sentence (if any) is
    // positive, all others negative; unknown/boolean questions without
    // recorded support are all-negative rows.
    sup.sentence_labels.assign(n_sentences, 0);
    for (int sid : qa.gold_sentence_ids)
      if (sid < n_sentences) sup.sentence_labels[sid] = 1;
  }
  return sup;
}

bool prepare_example(const QAPair& qa, const Passage& passage, const Vocab& vocab,
                     const TrainingConfig& tcfg, PreparedExample* out) {
  PreparedExample ex;
  ex.qa_id = qa.id;
  ex.full_enc = encode_pair(vocab, qa.question, passage.full_text);
  const int n_sentences = static_cast<int>(std::min<size_t>(26, passage.sentences.size()));
  try {
    ex.sup = build_supervision(qa, ex.full_enc, n_sentences, tcfg.tag_from_single);
  } catch (const UnmappableSpanError&) {
    return false;
  }
  if (!ex.sup.sentence_labels.empty()) {
    for (int i = 0; i < n_sentences; ++i)
      ex.sent_encs.push_back(encode_sentence_pair(vocab, qa.question, passage.sentences[i].text));
  }
  *out = std::move(ex);
  return true;
}

TrainResult train(const Dataset& dataset, const EncoderConfig& enc_cfg_in,
                  const TrainingConfig& tcfg, const std::string& log_path) {
  tcfg.validate();

  std::vector<std::string> corpus;
  for (const auto& p : dataset.passages) corpus.push_back(p.full_text);
  for (const auto& qa : dataset.qapairs) corpus.push_back(qa.question);
  Vocab vocab = build_vocab(corpus, 1);

  EncoderConfig cfg = enc_cfg_in;
  cfg.vocab_size = vocab.size();
  cfg.validate();

  std::map<std::string, const Passage*> by_id;
  for (const auto& p : dataset.passages) by_id[p.id] = &p;

  std::vector<PreparedExample> train_ex, val_ex;
  int skipped = 0;
  for (const auto& qa : dataset.qapairs) {
    const auto split_it = dataset.split.find(qa.id);
    if (split_it == dataset.split.end() || split_it->second == Split::test) continue;
    const auto pit = by_id.find(qa.passage_id);
    if (pit == by_id.end()) throw DataError("qa references missing passage: " + qa.passage_id);
    PreparedExample ex;
    if (!prepare_example(qa, *pit->second, vocab, tcfg, &ex)) {
      ++skipped;
      continue;
    }
    (split_it->second == Split::train ? train_ex : val_ex).push_back(std::move(ex));
  }
  if (train_ex.empty()) throw DataError("train: empty train split");

  ParamStore<float> params = build_model_params<float>(cfg, tcfg.seed);
  AdamState<float> state = AdamState<float>::init(params);
  ParamStore<float> grad_buffer = params.zeros_like();

  const long long n_batches =
      (static_cast<long long>(train_ex.size()) + tcfg.batch_size - 1) / tcfg.batch_size;
  const long long total_steps = n_batches * tcfg.epochs;

  std::ofstream log;
  if (!log_path.empty()) {
    log.open(log_path, std::ios::binary);
    if (!log) throw DataError("cannot open for writing: " + log_path);
  }

  TrainResult result;
  result.skipped_examples = skipped;
  double best_val = std::numeric_limits<double>::infinity();
  long long step = 0;
  const Rng order_rng_base = Rng(tcfg.seed).child(777);

  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    std::vector<size_t> order(train_ex.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng order_rng = order_rng_base.child(static_cast<uint64_t>(epoch));
    order_rng.shuffle(order);

    EpochLog el;
    el.epoch = epoch;
    long long epoch_batches = 0;
    for (size_t b = 0; b < order.size(); b += tcfg.batch_size) {
      std::vector<const PreparedExample*> batch;
      for (size_t i = b; i < std::min(order.size(), b + tcfg.batch_size); ++i)
        batch.push_back(&train_ex[order[i]]);
      LossBreakdown<float> lb =
          train_step(params, state, cfg, batch, tcfg, step, total_steps, grad_buffer);
      const double lr = lr_schedule(step + 1, total_steps, tcfg);
      el.train_total += lb.total;
      el.train_q += lb.l_q;
      el.train_a += lb.l_a;
      el.train_s += lb.l_s;
      el.train_t += lb.l_t;
      el.lr = lr;
      ++epoch_batches;
      ++step;
      if (log && step % 25 == 0) {
        log << nlohmann::json{{"epoch", epoch},      {"step", step},   {"l_q", lb.l_q},
                              {"l_a", lb.l_a},       {"l_s", lb.l_s},  {"l_t", lb.l_t},
                              {"total", lb.total},   {"lr", lr}}
                   .dump()
            << "\n";
      }
    }
    el.train_total /= epoch_batches;
    el.train_q /= epoch_batches;
    el.train_a /= epoch_batches;
    el.train_s /= epoch_batches;
    el.train_t /= epoch_batches;

    double val_total = 0;
    for (const auto& ex : val_ex)
      val_total += example_loss<float>(params, cfg, ex, tcfg, false, 0).total;
    el.val_total = val_ex.empty() ? 0 : val_total / static_cast<double>(val_ex.size());

    if (log) {
      log << nlohmann::json{{"epoch", epoch},
                            {"step", step},
                            {"train_total", el.train_total},
                            {"val_total", el.val_total},
                            {"lr", el.lr}}
                 .dump()
          << "\n";
    }
    result.log.push_back(el);

    if (el.val_total < best_val || result.best_epoch < 0) {
      best_val = el.val_total;
      result.best_epoch = epoch;
      result.best = Model{cfg, vocab, params};
    }
  }
  return result;
}

}  // namespace mseqa
