#ifndef MSEQA_TRAINING_HPP
#define MSEQA_TRAINING_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mseqa/corpus.hpp"
#include "mseqa/errors.hpp"
#include "mseqa/heads.hpp"
#include "mseqa/model.hpp"

namespace mseqa {

struct TrainingConfig {
  double lr_peak = 4e-5;
  int batch_size = 16;
  int epochs = 10;
  double warmup_fraction = 0.06;
  double clip_norm = 1.0;
  double lambda_q = 1.0, lambda_a = 1.0, lambda_s = 1.0, lambda_t = 1.0;
  uint64_t seed = 0;
  double weight_decay = 0.01;
  double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_epsilon = 1e-8;
  // Open choice: also supervise the tagger on non-multi examples (the
  // answer-bearing sentence positive, the rest negative). Off by default.
  bool tag_from_single = false;

  void validate() const {
    if (lr_peak <= 0 || batch_size <= 0 || epochs <= 0)
      throw ConfigError("training: rates and counts must be positive");
    if (warmup_fraction <= 0 || warmup_fraction >= 1)
      throw ConfigError("training: warmup_fraction must be in (0,1)");
    if (clip_norm <= 0) throw ConfigError("training: clip_norm must be positive");
    if (lambda_q < 0 || lambda_a < 0 || lambda_s < 0 || lambda_t < 0 ||
        lambda_q + lambda_a + lambda_s + lambda_t <= 0)
      throw ConfigError("training: lambdas must be >= 0 with at least one > 0");
  }
};

// Eq 1-5 targets for one QAPair.
struct SupervisionRecord {
  bool multispan_label = false;                // false = single path
  std::optional<int> answer_type_label;        // 0 Yes, 1 No, 2 Unknown
  std::optional<std::pair<int, int>> start_end;  // token positions, 0 = CLS
  std::vector<int> sentence_labels;            // per encoded sentence, 0/1
};

template <typename Real>
struct LossBreakdown {
  Real l_q = 0, l_a = 0, l_s = 0, l_t = 0;
  Real total = 0;
  bool has_q = false, has_a = false, has_t = false;
};

// One fully prepared training example.
struct PreparedExample {
  std::string qa_id;
  Encoding full_enc;
  std::vector<Encoding> sent_encs;  // only for tagger-supervised examples
  SupervisionRecord sup;
};

// Maps corpus gold onto head targets. Throws UnmappableSpanError when the
// gold span fell past the truncation point (caller skips the example).
SupervisionRecord build_supervision(const QAPair& qa, const Encoding& enc, int n_sentences,
                                    bool tag_from_single = false);

// Piecewise-linear LR: 0 -> lr_peak over the first ceil(warmup*total) steps,
// then lr_peak -> 0 at step == total_steps.
double lr_schedule(long long step, long long total_steps, const TrainingConfig& cfg);

// ---------------------------------------------------------------------------
// per-example loss + gradient (the Eq. 6 pipeline)
// ---------------------------------------------------------------------------

namespace detail {

// Pooled ranges for the tagger pair encoding: question tokens and sentence
// tokens, both excluding specials.
inline std::pair<std::pair<int, int>, std::pair<int, int>> tagger_pool_ranges(
    const Encoding& enc) {
  const int base = enc.context_base();
  int q_begin = 1, q_end = base - 1;           // [CLS] q ... [SEP]
  int s_begin = base, s_end = enc.length() - 1;  // ctx ... [SEP]
  if (q_end <= q_begin) q_end = q_begin + 1;     // degenerate empty question
  if (s_end <= s_begin) s_end = s_begin + 1;     // degenerate empty sentence
  return {{q_begin, q_end}, {s_begin, s_end}};
}

}  // namespace detail

// Computes the Eq. 6 loss for one example; when grads != nullptr also
// accumulates d(total)/d(theta), including every encoder pass.
template <typename Real>
LossBreakdown<Real> example_loss(const ParamStore<Real>& params, const EncoderConfig& cfg,
                                 const PreparedExample& ex, const TrainingConfig& tcfg,
                                 bool train_mode, uint64_t seed,
                                 ParamStore<Real>* grads = nullptr) {
  LossBreakdown<Real> lb;
  const int d = cfg.hidden;

  EncodeCache<Real> cache;
  Mat<Real> H = encode(params, cfg, ex.full_enc, train_mode, seed, grads ? &cache : nullptr);
  Vec<Real> h_cls = H.row(0).transpose();
  Mat<Real> dH = Mat<Real>::Zero(H.rows(), H.cols());

  // L_s: multi-span routing, supervised on every example
  {
    const std::array<Real, 2> p_s = predict_multispan(h_cls, params);
    const int label = ex.sup.multispan_label ? 1 : 0;
    lb.l_s = -std::log(std::max(p_s[label], std::numeric_limits<Real>::min()));
    if (grads) {
      Vec<Real> dlogits(2);
      dlogits << p_s[0], p_s[1];
      dlogits[label] -= Real(1);
      dlogits *= Real(tcfg.lambda_s);
      grads->at("head.multispan.w").mat() += dlogits * h_cls.transpose();
      grads->at("head.multispan.b").vec() += dlogits;
      dH.row(0) += (params.at("head.multispan.w").mat().transpose() * dlogits).transpose();
    }
  }

  // L_q: start/end log-likelihood (span answers and the CLS anchor for
  // boolean/unknown)
  if (ex.sup.start_end) {
    TokenFfnCache<Real> sc, ec;
    SpanDistributions<Real> dist =
        span_logits(H, params, ex.full_enc.attention_mask, grads ? &sc : nullptr,
                    grads ? &ec : nullptr);
    const auto [s, e] = *ex.sup.start_end;
    lb.l_q = -std::log(std::max(dist.p_start[s], std::numeric_limits<Real>::min())) -
             std::log(std::max(dist.p_end[e], std::numeric_limits<Real>::min()));
    lb.has_q = true;
    if (grads) {
      Vec<Real> dls = dist.p_start;
      dls[s] -= Real(1);
      dls *= Real(tcfg.lambda_q);
      token_ffn_backward(H, params, "head.start.", sc, dls, *grads, dH);
      Vec<Real> dle = dist.p_end;
      dle[e] -= Real(1);
      dle *= Real(tcfg.lambda_q);
      token_ffn_backward(H, params, "head.end.", ec, dle, *grads, dH);
    }
  }

  // L_a: Yes/No/Unknown, present when the gold start/end is the CLS anchor
  if (ex.sup.answer_type_label) {
    const std::array<Real, 3> p_a = predict_answer_type(h_cls, params);
    const int label = *ex.sup.answer_type_label;
    lb.l_a = -std::log(std::max(p_a[label], std::numeric_limits<Real>::min()));
    lb.has_a = true;
    if (grads) {
      Vec<Real> dlogits(3);
      dlogits << p_a[0], p_a[1], p_a[2];
      dlogits[label] -= Real(1);
      dlogits *= Real(tcfg.lambda_a);
      grads->at("head.anstype.w").mat() += dlogits * h_cls.transpose();
      grads->at("head.anstype.b").vec() += dlogits;
      dH.row(0) += (params.at("head.anstype.w").mat().transpose() * dlogits).transpose();
    }
  }

  if (grads) encode_backward(params, cfg, cache, dH, *grads);

  // L_t: per-sentence tagger over the pair encodings
  if (!ex.sup.sentence_labels.empty()) {
    const int n = static_cast<int>(ex.sent_encs.size());
    lb.has_t = true;
    const Real inv_n = Real(1) / Real(n);
    for (int i = 0; i < n; ++i) {
      EncodeCache<Real> scache;
      Mat<Real> Hs = encode(params, cfg, ex.sent_encs[i], train_mode,
                            Rng(seed).child(100 + i).next_u64(), grads ? &scache : nullptr);
      const auto [qr, sr] = detail::tagger_pool_ranges(ex.sent_encs[i]);
      Vec<Real> h_q = pool(Hs, qr.first, qr.second);
      Vec<Real> h_sent = pool(Hs, sr.first, sr.second);
      TaggerCache<Real> tc;
      const std::array<Real, 2> p_t = tag_sentence(h_q, h_sent, params, grads ? &tc : nullptr);
      const int label = ex.sup.sentence_labels[i];
      lb.l_t += -std::log(std::max(p_t[label], std::numeric_limits<Real>::min())) * inv_n;
      if (grads) {
        Vec<Real> dlogits(2);
        dlogits << p_t[0], p_t[1];
        dlogits[label] -= Real(1);
        dlogits *= Real(tcfg.lambda_t) * inv_n;
        Vec<Real> dh_q, dh_sent;
        tag_sentence_backward(params, tc, dlogits, *grads, dh_q, dh_sent);
        Mat<Real> dHs = Mat<Real>::Zero(Hs.rows(), Hs.cols());
        const Real qn = Real(1) / Real(qr.second - qr.first);
        const Real sn = Real(1) / Real(sr.second - sr.first);
        for (int t = qr.first; t < qr.second; ++t) dHs.row(t) += (dh_q * qn).transpose();
        for (int t = sr.first; t < sr.second; ++t) dHs.row(t) += (dh_sent * sn).transpose();
        encode_backward(params, cfg, scache, dHs, *grads);
      }
    }
  }

  lb.total = Real(tcfg.lambda_q) * lb.l_q + Real(tcfg.lambda_a) * lb.l_a +
             Real(tcfg.lambda_s) * lb.l_s + Real(tcfg.lambda_t) * lb.l_t;
  if (!std::isfinite(static_cast<double>(lb.total)))
    throw TrainingDivergenceError("non-finite loss for example " + ex.qa_id);
  return lb;
}

// ---------------------------------------------------------------------------
// optimizer
// ---------------------------------------------------------------------------

// Scales all gradients by max_norm/g when the global L2 norm g exceeds
// max_norm. Returns the pre-clip norm.
template <typename Real>
double clip_gradients(ParamStore<Real>& grads, double max_norm) {
  double sq = 0;
  for (const auto& t : grads.tensors)
    for (Real v : t.data) {
      if (!std::isfinite(static_cast<double>(v)))
        throw TrainingDivergenceError("non-finite gradient in " + t.name);
      sq += static_cast<double>(v) * static_cast<double>(v);
    }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const Real s = static_cast<Real>(max_norm / norm);
    for (auto& t : grads.tensors)
      for (Real& v : t.data) v *= s;
  }
  return norm;
}

template <typename Real>
struct AdamState {
  ParamStore<Real> m, v;
  long long t = 0;

  static AdamState init(const ParamStore<Real>& params) {
    return AdamState{params.zeros_like(), params.zeros_like(), 0};
  }
};

// AdamW with bias correction and decoupled weight decay.
template <typename Real>
void adamw_update(ParamStore<Real>& params, AdamState<Real>& state, const ParamStore<Real>& grads,
                  const TrainingConfig& cfg, double lr) {
  state.t += 1;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (size_t ti = 0; ti < params.tensors.size(); ++ti) {
    auto& p = params.tensors[ti].data;
    auto& m = state.m.tensors[ti].data;
    auto& v = state.v.tensors[ti].data;
    const auto& g = grads.tensors[ti].data;
    for (size_t i = 0; i < p.size(); ++i) {
      const double gi = static_cast<double>(g[i]);
      const double mi = b1 * static_cast<double>(m[i]) + (1.0 - b1) * gi;
      const double vi = b2 * static_cast<double>(v[i]) + (1.0 - b2) * gi * gi;
      m[i] = static_cast<Real>(mi);
      v[i] = static_cast<Real>(vi);
      const double mhat = mi / bc1;
      const double vhat = vi / bc2;
      p[i] = static_cast<Real>(static_cast<double>(p[i]) -
                               lr * (mhat / (std::sqrt(vhat) + cfg.adam_epsilon) +
                                     cfg.weight_decay * static_cast<double>(p[i])));
    }
  }
}

// One optimizer step over a batch: mean gradient in example order, clip,
// AdamW at lr_schedule(step + 1).
template <typename Real>
LossBreakdown<Real> train_step(ParamStore<Real>& params, AdamState<Real>& state,
                               const EncoderConfig& cfg,
                               const std::vector<const PreparedExample*>& batch,
                               const TrainingConfig& tcfg, long long step, long long total_steps,
                               ParamStore<Real>& grad_buffer) {
  grad_buffer.set_zero();
  LossBreakdown<Real> sum;
  int nq = 0, na = 0, nt = 0;
  for (size_t i = 0; i < batch.size(); ++i) {
    const uint64_t ex_seed = Rng(tcfg.seed).child(0x5EED).child(
        static_cast<uint64_t>(step) * 131 + i).next_u64();
    LossBreakdown<Real> lb =
        example_loss(params, cfg, *batch[i], tcfg, /*train_mode=*/true, ex_seed, &grad_buffer);
    sum.l_q += lb.l_q; sum.l_a += lb.l_a; sum.l_s += lb.l_s; sum.l_t += lb.l_t;
    sum.total += lb.total;
    nq += lb.has_q; na += lb.has_a; nt += lb.has_t;
  }
  const Real inv = Real(1) / Real(batch.size());
  for (auto& t : grad_buffer.tensors)
    for (Real& v : t.data) v *= inv;
  clip_gradients(grad_buffer, tcfg.clip_norm);
  adamw_update(params, state, grad_buffer, tcfg, lr_schedule(step + 1, total_steps, tcfg));

  sum.l_q = nq ? sum.l_q / Real(nq) : Real(0);
  sum.l_a = na ? sum.l_a / Real(na) : Real(0);
  sum.l_t = nt ? sum.l_t / Real(nt) : Real(0);
  sum.l_s *= inv;
  sum.total *= inv;
  sum.has_q = nq; sum.has_a = na; sum.has_t = nt;
  return sum;
}

// ---------------------------------------------------------------------------
// full training run
// ---------------------------------------------------------------------------

struct EpochLog {
  int epoch = 0;
  double train_total = 0, train_q = 0, train_a = 0, train_s = 0, train_t = 0;
  double val_total = 0;
  double lr = 0;
};

struct TrainResult {
  Model best;                  // best-validation checkpoint
  std::vector<EpochLog> log;
  int best_epoch = -1;
  int skipped_examples = 0;    // unmappable spans
};

// Prepares encodings + supervision for one qa. Returns false (and leaves
// *out untouched) when the example must be skipped.
bool prepare_example(const QAPair& qa, const Passage& passage, const Vocab& vocab,
                     const TrainingConfig& tcfg, PreparedExample* out);

TrainResult train(const Dataset& dataset, const EncoderConfig& enc_cfg,
                  const TrainingConfig& tcfg, const std::string& log_path = "");

}  // namespace mseqa

#endif
