#ifndef MSEQA_HEADS_HPP
#define MSEQA_HEADS_HPP

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "mseqa/encoder.hpp"
#include "mseqa/tensor.hpp"

namespace mseqa {

// Head parameter names, all hanging off the encoder width d:
//   head.multispan.{w,b}   d -> 2 linear            (single vs multi routing)
//   head.anstype.{w,b}     d -> 3 linear            (Yes / No / Unknown)
//   head.start.{w1,b1,w2,b2}, head.end.*  d -> d -> 1 FFN with GELU, per token
//   head.tagger.{w1,b1,w2,b2}  2d -> d -> 2 FFN with GELU
inline std::vector<std::pair<std::string, std::vector<int>>> head_param_shapes(int d) {
  std::vector<std::pair<std::string, std::vector<int>>> out;
  out.push_back({"head.multispan.w", {2, d}});
  out.push_back({"head.multispan.b", {2}});
  out.push_back({"head.anstype.w", {3, d}});
  out.push_back({"head.anstype.b", {3}});
  for (const char* h : {"head.start.", "head.end."}) {
    out.push_back({std::string(h) + "w1", {d, d}});
    out.push_back({std::string(h) + "b1", {d}});
    out.push_back({std::string(h) + "w2", {1, d}});
    out.push_back({std::string(h) + "b2", {1}});
  }
  out.push_back({"head.tagger.w1", {d, 2 * d}});
  out.push_back({"head.tagger.b1", {d}});
  out.push_back({"head.tagger.w2", {2, d}});
  out.push_back({"head.tagger.b2", {2}});
  return out;
}

template <typename Real>
void add_head_params(ParamStore<Real>& store, int d) {
  for (auto& [name, shape] : head_param_shapes(d)) store.add(name, shape);
}

template <typename Real>
void init_head_params(ParamStore<Real>& store, int d, uint64_t seed) {
  Rng rng(seed);
  for (auto& [name, shape] : head_param_shapes(d)) {
    auto& t = store.at(name);
    if (shape.size() == 1) {
      std::fill(t.data.begin(), t.data.end(), Real(0));
    } else {
      for (auto& v : t.data)
        v = static_cast<Real>(rng.next_trunc_normal(kInitStd / kTruncNormStd));
    }
  }
}

namespace detail {

template <typename Real, size_t N>
std::array<Real, N> softmax_array(const std::array<Real, N>& logits) {
  Real mx = logits[0];
  for (Real v : logits) mx = std::max(mx, v);
  std::array<Real, N> p;
  Real sum = Real(0);
  for (size_t i = 0; i < N; ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

}  // namespace detail

// Eq-1 routing head: p(single), p(multi) from the CLS row.
template <typename Real>
std::array<Real, 2> predict_multispan(const Vec<Real>& h_cls, const ParamStore<Real>& params) {
  Vec<Real> logits = params.at("head.multispan.w").mat() * h_cls +
                     params.at("head.multispan.b").vec();
  return detail::softmax_array<Real, 2>({logits[0], logits[1]});
}

// Eq-2 answer-type head: p(Yes), p(No), p(Unknown).
template <typename Real>
std::array<Real, 3> predict_answer_type(const Vec<Real>& h_cls, const ParamStore<Real>& params) {
  Vec<Real> logits =
      params.at("head.anstype.w").mat() * h_cls + params.at("head.anstype.b").vec();
  return detail::softmax_array<Real, 3>({logits[0], logits[1], logits[2]});
}

template <typename Real>
struct SpanDistributions {
  Vec<Real> p_start;
  Vec<Real> p_end;
};

template <typename Real>
struct TokenFfnCache {
  Mat<Real> pre;   // T x d
  Mat<Real> act;   // T x d
  Vec<Real> logits;
};

// Two-layer per-token FFN emitting one scalar logit per position.
template <typename Real>
Vec<Real> token_ffn_forward(const Mat<Real>& H, const ParamStore<Real>& params,
                            const std::string& prefix, TokenFfnCache<Real>* cache = nullptr) {
  Mat<Real> pre = H * params.at(prefix + "w1").mat().transpose();
  pre.rowwise() += params.at(prefix + "b1").vec().transpose();
  Mat<Real> act = pre.unaryExpr([](Real v) { return detail::gelu(v); });
  Vec<Real> logits = act * params.at(prefix + "w2").mat().row(0).transpose();
  logits.array() += params.at(prefix + "b2").data[0];
  if (cache) {
    cache->pre = std::move(pre);
    cache->act = std::move(act);
    cache->logits = logits;
  }
  return logits;
}

// d(loss)/d(logits) -> head grads plus d(loss)/dH accumulated into dH.
template <typename Real>
void token_ffn_backward(const Mat<Real>& H, const ParamStore<Real>& params,
                        const std::string& prefix, const TokenFfnCache<Real>& cache,
                        const Vec<Real>& dlogits, ParamStore<Real>& grads, Mat<Real>& dH) {
  grads.at(prefix + "w2").mat().row(0) += (dlogits.transpose() * cache.act).row(0);
  grads.at(prefix + "b2").data[0] += dlogits.sum();
  Mat<Real> dact = dlogits * params.at(prefix + "w2").mat().row(0);
  Mat<Real> dpre =
      dact.array() * cache.pre.unaryExpr([](Real v) { return detail::gelu_grad(v); }).array();
  grads.at(prefix + "w1").mat() += dpre.transpose() * H;
  grads.at(prefix + "b1").vec() += dpre.colwise().sum().transpose();
  dH += dpre * params.at(prefix + "w1").mat();
}

template <typename Real>
Vec<Real> masked_softmax(const Vec<Real>& logits, const std::vector<int>& mask) {
  const Eigen::Index T = logits.size();
  Vec<Real> p(T);
  Real mx = -std::numeric_limits<Real>::infinity();
  for (Eigen::Index i = 0; i < T; ++i)
    if (mask[i]) mx = std::max(mx, logits[i]);
  Real sum = Real(0);
  for (Eigen::Index i = 0; i < T; ++i) {
    p[i] = mask[i] ? std::exp(logits[i] - mx) : Real(0);
    sum += p[i];
  }
  p /= sum;
  return p;
}

// Eq-3/4 start and end distributions over every unpadded position, CLS
// included.
template <typename Real>
SpanDistributions<Real> span_logits(const Mat<Real>& H, const ParamStore<Real>& params,
                                    const std::vector<int>& mask,
                                    TokenFfnCache<Real>* start_cache = nullptr,
                                    TokenFfnCache<Real>* end_cache = nullptr) {
  SpanDistributions<Real> out;
  out.p_start = masked_softmax(token_ffn_forward(H, params, "head.start.", start_cache), mask);
  out.p_end = masked_softmax(token_ffn_forward(H, params, "head.end.", end_cache), mask);
  return out;
}

// Arithmetic mean of the rows in [begin, end).
template <typename Real>
Vec<Real> pool(const Mat<Real>& H, int begin, int end) {
  if (begin < 0 || end > H.rows() || begin >= end)
    throw DataError("pool: empty or out-of-range token range");
  Vec<Real> out = Vec<Real>::Zero(H.cols());
  for (int t = begin; t < end; ++t) out += H.row(t).transpose();
  return out / Real(end - begin);
}

template <typename Real>
struct TaggerCache {
  Vec<Real> z;    // 2d concat input
  Vec<Real> pre;  // d
  Vec<Real> act;  // d
};

// Eq-5 tagger: p(not answer), p(answer) for one (question, sentence) pair.
// Concatenation order is (question, sentence).
template <typename Real>
std::array<Real, 2> tag_sentence(const Vec<Real>& h_q, const Vec<Real>& h_sent,
                                 const ParamStore<Real>& params,
                                 TaggerCache<Real>* cache = nullptr) {
  const Eigen::Index d = h_q.size();
  Vec<Real> z(2 * d);
  z.head(d) = h_q;
  z.tail(d) = h_sent;
  Vec<Real> pre = params.at("head.tagger.w1").mat() * z + params.at("head.tagger.b1").vec();
  Vec<Real> act = pre.unaryExpr([](Real v) { return detail::gelu(v); });
  Vec<Real> logits = params.at("head.tagger.w2").mat() * act + params.at("head.tagger.b2").vec();
  if (cache) {
    cache->z = std::move(z);
    cache->pre = std::move(pre);
    cache->act = std::move(act);
  }
  return detail::softmax_array<Real, 2>({logits[0], logits[1]});
}

// d(loss)/d(logits) -> grads plus gradients w.r.t. the two pooled inputs.
template <typename Real>
void tag_sentence_backward(const ParamStore<Real>& params, const TaggerCache<Real>& cache,
                           const Vec<Real>& dlogits, ParamStore<Real>& grads, Vec<Real>& dh_q,
                           Vec<Real>& dh_sent) {
  grads.at("head.tagger.w2").mat() += dlogits * cache.act.transpose();
  grads.at("head.tagger.b2").vec() += dlogits;
  Vec<Real> dact = params.at("head.tagger.w2").mat().transpose() * dlogits;
  Vec<Real> dpre =
      dact.array() * cache.pre.unaryExpr([](Real v) { return detail::gelu_grad(v); }).array();
  grads.at("head.tagger.w1").mat() += dpre * cache.z.transpose();
  grads.at("head.tagger.b1").vec() += dpre;
  Vec<Real> dz = params.at("head.tagger.w1").mat().transpose() * dpre;
  const Eigen::Index d = dz.size() / 2;
  dh_q = dz.head(d);
  dh_sent = dz.tail(d);
}

}  // namespace mseqa

#endif
