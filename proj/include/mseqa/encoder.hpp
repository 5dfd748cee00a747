#ifndef MSEQA_ENCODER_HPP
#define MSEQA_ENCODER_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "mseqa/errors.hpp"
#include "mseqa/rng.hpp"
#include "mseqa/tensor.hpp"
#include "mseqa/tokenizer.hpp"

namespace mseqa {

struct EncoderConfig {
  int layers = 2;
  int heads = 4;
  int hidden = 64;
  int ffn_dim = 256;
  int max_positions = 512;
  int vocab_size = 0;
  double dropout_rate = 0.1;

  void validate() const {
    if (hidden <= 0 || heads <= 0 || hidden % heads != 0)
      throw ConfigError("encoder: hidden must be a positive multiple of heads");
    if (layers < 0 || ffn_dim <= 0 || max_positions <= 0 || vocab_size <= 0)
      throw ConfigError("encoder: non-positive dimension");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
      throw ConfigError("encoder: dropout_rate must be in [0,1)");
  }
};

constexpr double kLayerNormEps = 1e-5;
constexpr double kInitStd = 0.02;
// Std of a standard normal truncated to [-2, 2]; draws are rescaled by it so
// the post-truncation std equals the requested one.
constexpr double kTruncNormStd = 0.8796256610342398;

namespace detail {

template <typename Real>
inline Real gelu(Real x) {
  return Real(0.5) * x * (Real(1) + std::erf(x * Real(0.7071067811865476)));
}

template <typename Real>
inline Real gelu_grad(Real x) {
  const Real cdf = Real(0.5) * (Real(1) + std::erf(x * Real(0.7071067811865476)));
  const Real pdf = std::exp(Real(-0.5) * x * x) * Real(0.3989422804014327);
  return cdf + x * pdf;
}

// Per-row layer normalization; caches xhat and 1/std for the backward pass.
template <typename Real>
void layernorm_forward(const Mat<Real>& x, const Tensor<Real>& g, const Tensor<Real>& b,
                       Mat<Real>& y, Mat<Real>& xhat, Vec<Real>& rstd) {
  const Eigen::Index T = x.rows(), d = x.cols();
  y.resize(T, d);
  xhat.resize(T, d);
  rstd.resize(T);
  const auto gv = g.vec();
  const auto bv = b.vec();
  for (Eigen::Index t = 0; t < T; ++t) {
    const Real mu = x.row(t).mean();
    const Real var = (x.row(t).array() - mu).square().mean();
    const Real rs = Real(1) / std::sqrt(var + Real(kLayerNormEps));
    rstd[t] = rs;
    xhat.row(t) = (x.row(t).array() - mu) * rs;
    y.row(t) = xhat.row(t).array() * gv.transpose().array() + bv.transpose().array();
  }
}

template <typename Real>
void layernorm_backward(const Mat<Real>& dy, const Mat<Real>& xhat, const Vec<Real>& rstd,
                        const Tensor<Real>& g, Mat<Real>& dx, Tensor<Real>& dg,
                        Tensor<Real>& db) {
  const Eigen::Index T = dy.rows(), d = dy.cols();
  dx.resize(T, d);
  auto dgv = dg.vec();
  auto dbv = db.vec();
  const auto gv = g.vec();
  for (Eigen::Index t = 0; t < T; ++t) {
    const auto dyr = dy.row(t).array();
    dgv.array() += (dyr * xhat.row(t).array()).transpose();
    dbv.array() += dyr.transpose();
    const auto dxhat = dyr * gv.transpose().array();
    const Real m1 = dxhat.mean();
    const Real m2 = (dxhat * xhat.row(t).array()).mean();
    dx.row(t) = rstd[t] * (dxhat - m1 - xhat.row(t).array() * m2);
  }
}

// Inverted dropout mask: entries are 0 or 1/keep.
template <typename Real>
Mat<Real> dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng rng) {
  Mat<Real> m(rows, cols);
  const Real keep_inv = Real(1.0 / (1.0 - rate));
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      m(i, j) = rng.next_bernoulli(rate) ? Real(0) : keep_inv;
  return m;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// parameters
// ---------------------------------------------------------------------------

inline std::vector<std::pair<std::string, std::vector<int>>> encoder_param_shapes(
    const EncoderConfig& cfg) {
  std::vector<std::pair<std::string, std::vector<int>>> out;
  const int d = cfg.hidden, f = cfg.ffn_dim;
  out.push_back({"emb.tok", {cfg.vocab_size, d}});
  out.push_back({"emb.pos", {cfg.max_positions, d}});
  out.push_back({"emb.seg", {2, d}});
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    out.push_back({p + "ln1.g", {d}});
    out.push_back({p + "ln1.b", {d}});
    for (const char* m : {"wq", "wk", "wv", "wo"}) out.push_back({p + "attn." + m, {d, d}});
    for (const char* m : {"bq", "bk", "bv", "bo"}) out.push_back({p + "attn." + m, {d}});
    out.push_back({p + "ln2.g", {d}});
    out.push_back({p + "ln2.b", {d}});
    out.push_back({p + "ffn.w1", {f, d}});
    out.push_back({p + "ffn.b1", {f}});
    out.push_back({p + "ffn.w2", {d, f}});
    out.push_back({p + "ffn.b2", {d}});
  }
  out.push_back({"final.g", {d}});
  out.push_back({"final.b", {d}});
  return out;
}

template <typename Real>
void add_encoder_params(ParamStore<Real>& store, const EncoderConfig& cfg) {
  for (auto& [name, shape] : encoder_param_shapes(cfg)) store.add(name, shape);
}

// Weight matrices and embeddings: truncated normal with std 0.02. Norm
// scales 1, everything else 0.
template <typename Real>
void init_encoder_params(ParamStore<Real>& store, const EncoderConfig& cfg, uint64_t seed) {
  Rng rng(seed);
  for (auto& [name, shape] : encoder_param_shapes(cfg)) {
    auto& t = store.at(name);
    if (shape.size() == 1) {
      // norm scales to 1, all biases/shifts to 0
      std::fill(t.data.begin(), t.data.end(), name.ends_with(".g") ? Real(1) : Real(0));
    } else {
      for (auto& v : t.data)
        v = static_cast<Real>(rng.next_trunc_normal(kInitStd / kTruncNormStd));
    }
  }
}

// ---------------------------------------------------------------------------
// forward / backward
// ---------------------------------------------------------------------------

template <typename Real>
struct LayerCache {
  Mat<Real> h_in;
  Mat<Real> ln1_xhat;
  Vec<Real> ln1_rstd;
  Mat<Real> x1;
  Mat<Real> Q, K, V;
  std::vector<Mat<Real>> att;  // per-head softmax probs, T x T
  Mat<Real> att_concat;        // pre output-projection
  Mat<Real> attn_drop;         // empty when not training
  Mat<Real> h_mid;
  Mat<Real> ln2_xhat;
  Vec<Real> ln2_rstd;
  Mat<Real> x2;
  Mat<Real> ffn_pre;
  Mat<Real> ffn_act;
  Mat<Real> ffn_drop;
};

template <typename Real>
struct EncodeCache {
  Encoding enc;
  bool train_mode = false;
  Mat<Real> emb_drop;
  std::vector<LayerCache<Real>> layers;
  Mat<Real> h_last;
  Mat<Real> lnf_xhat;
  Vec<Real> lnf_rstd;
  Mat<Real> out;  // H_L, T x d
};

// Pre-normalization transformer encoder. Returns H_L; fills *cache when a
// backward pass will follow.
template <typename Real>
Mat<Real> encode(const ParamStore<Real>& params, const EncoderConfig& cfg, const Encoding& enc,
                 bool train_mode, uint64_t seed, EncodeCache<Real>* cache = nullptr) {
  const int T = enc.length();
  const int d = cfg.hidden;
  const int H = cfg.heads;
  const int dh = d / H;
  if (T > cfg.max_positions) throw DataError("encode: input longer than max_positions");
  const bool drop = train_mode && cfg.dropout_rate > 0.0;
  Rng drng = Rng(seed);

  Mat<Real> h(T, d);
  for (int t = 0; t < T; ++t) {
    h.row(t) = params.at("emb.tok").mat().row(enc.ids[t]) + params.at("emb.pos").mat().row(t) +
               params.at("emb.seg").mat().row(enc.segment_ids[t]);
  }
  if (cache) {
    cache->enc = enc;
    cache->train_mode = drop;
    cache->layers.assign(cfg.layers, LayerCache<Real>{});
  }
  if (drop) {
    Mat<Real> m = detail::dropout_mask<Real>(T, d, cfg.dropout_rate, drng.child(0));
    h.array() *= m.array();
    if (cache) cache->emb_drop = std::move(m);
  }

  const Real scale = Real(1) / std::sqrt(Real(dh));
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    LayerCache<Real> local;
    LayerCache<Real>& lc = cache ? cache->layers[l] : local;
    lc.h_in = h;

    Mat<Real> x1;
    detail::layernorm_forward(h, params.at(p + "ln1.g"), params.at(p + "ln1.b"), x1, lc.ln1_xhat,
                              lc.ln1_rstd);
    lc.x1 = x1;
    lc.Q = x1 * params.at(p + "attn.wq").mat().transpose();
    lc.Q.rowwise() += params.at(p + "attn.bq").vec().transpose();
    lc.K = x1 * params.at(p + "attn.wk").mat().transpose();
    lc.K.rowwise() += params.at(p + "attn.bk").vec().transpose();
    lc.V = x1 * params.at(p + "attn.wv").mat().transpose();
    lc.V.rowwise() += params.at(p + "attn.bv").vec().transpose();

    lc.att.assign(H, Mat<Real>());
    lc.att_concat.resize(T, d);
    for (int hd = 0; hd < H; ++hd) {
      Mat<Real> scores = lc.Q.middleCols(hd * dh, dh) * lc.K.middleCols(hd * dh, dh).transpose();
      scores *= scale;
      Mat<Real>& P = lc.att[hd];
      P.resize(T, T);
      for (int q = 0; q < T; ++q) {
        Real mx = -std::numeric_limits<Real>::infinity();
        for (int k = 0; k < T; ++k)
          if (enc.attention_mask[k]) mx = std::max(mx, scores(q, k));
        Real sum = Real(0);
        for (int k = 0; k < T; ++k) {
          if (enc.attention_mask[k]) {
            P(q, k) = std::exp(scores(q, k) - mx);
            sum += P(q, k);
          } else {
            P(q, k) = Real(0);
          }
        }
        P.row(q) /= sum;
      }
      lc.att_concat.middleCols(hd * dh, dh) = P * lc.V.middleCols(hd * dh, dh);
    }

    Mat<Real> attn_out = lc.att_concat * params.at(p + "attn.wo").mat().transpose();
    attn_out.rowwise() += params.at(p + "attn.bo").vec().transpose();
    if (drop) {
      Mat<Real> m = detail::dropout_mask<Real>(T, d, cfg.dropout_rate, drng.child(2 * l + 1));
      attn_out.array() *= m.array();
      lc.attn_drop = std::move(m);
    }
    h += attn_out;
    lc.h_mid = h;

    Mat<Real> x2;
    detail::layernorm_forward(h, params.at(p + "ln2.g"), params.at(p + "ln2.b"), x2, lc.ln2_xhat,
                              lc.ln2_rstd);
    lc.x2 = x2;
    lc.ffn_pre = x2 * params.at(p + "ffn.w1").mat().transpose();
    lc.ffn_pre.rowwise() += params.at(p + "ffn.b1").vec().transpose();
    lc.ffn_act = lc.ffn_pre.unaryExpr([](Real v) { return detail::gelu(v); });
    Mat<Real> ffn_out = lc.ffn_act * params.at(p + "ffn.w2").mat().transpose();
    ffn_out.rowwise() += params.at(p + "ffn.b2").vec().transpose();
    if (drop) {
      Mat<Real> m = detail::dropout_mask<Real>(T, d, cfg.dropout_rate, drng.child(2 * l + 2));
      ffn_out.array() *= m.array();
      lc.ffn_drop = std::move(m);
    }
    h += ffn_out;
  }

  Mat<Real> out;
  if (cache) {
    cache->h_last = h;
    detail::layernorm_forward(h, params.at("final.g"), params.at("final.b"), out, cache->lnf_xhat,
                              cache->lnf_rstd);
    cache->out = out;
  } else {
    Mat<Real> xhat;
    Vec<Real> rstd;
    detail::layernorm_forward(h, params.at("final.g"), params.at("final.b"), out, xhat, rstd);
  }
  return out;
}

// Accumulates d(loss)/d(theta) into *grads given upstream d(loss)/d(H_L).
// Rows of upstream at padded positions are ignored.
template <typename Real>
void encode_backward(const ParamStore<Real>& params, const EncoderConfig& cfg,
                     const EncodeCache<Real>& cache, const Mat<Real>& upstream,
                     ParamStore<Real>& grads) {
  const Encoding& enc = cache.enc;
  const int T = enc.length();
  const int d = cfg.hidden;
  const int H = cfg.heads;
  const int dh = d / H;
  if (upstream.rows() != T || upstream.cols() != d)
    throw DataError("encode_backward: upstream/cache shape mismatch");
  const Real scale = Real(1) / std::sqrt(Real(dh));

  Mat<Real> dout = upstream;
  for (int t = 0; t < T; ++t)
    if (!enc.attention_mask[t]) dout.row(t).setZero();

  Mat<Real> dh_cur;
  detail::layernorm_backward(dout, cache.lnf_xhat, cache.lnf_rstd, params.at("final.g"), dh_cur,
                             grads.at("final.g"), grads.at("final.b"));

  for (int l = cfg.layers - 1; l >= 0; --l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    const LayerCache<Real>& lc = cache.layers[l];

    // FFN block
    Mat<Real> d_ffn_out = dh_cur;
    if (lc.ffn_drop.size()) d_ffn_out.array() *= lc.ffn_drop.array();
    grads.at(p + "ffn.w2").mat() += d_ffn_out.transpose() * lc.ffn_act;
    grads.at(p + "ffn.b2").vec() += d_ffn_out.colwise().sum().transpose();
    Mat<Real> dact = d_ffn_out * params.at(p + "ffn.w2").mat();
    Mat<Real> dpre =
        dact.array() * lc.ffn_pre.unaryExpr([](Real v) { return detail::gelu_grad(v); }).array();
    grads.at(p + "ffn.w1").mat() += dpre.transpose() * lc.x2;
    grads.at(p + "ffn.b1").vec() += dpre.colwise().sum().transpose();
    Mat<Real> dx2 = dpre * params.at(p + "ffn.w1").mat();
    Mat<Real> dh_mid_ln;
    detail::layernorm_backward(dx2, lc.ln2_xhat, lc.ln2_rstd, params.at(p + "ln2.g"), dh_mid_ln,
                               grads.at(p + "ln2.g"), grads.at(p + "ln2.b"));
    Mat<Real> dh_mid = dh_cur + dh_mid_ln;

    // attention block
    Mat<Real> d_attn_out = dh_mid;
    if (lc.attn_drop.size()) d_attn_out.array() *= lc.attn_drop.array();
    grads.at(p + "attn.wo").mat() += d_attn_out.transpose() * lc.att_concat;
    grads.at(p + "attn.bo").vec() += d_attn_out.colwise().sum().transpose();
    Mat<Real> d_concat = d_attn_out * params.at(p + "attn.wo").mat();

    Mat<Real> dQ(T, d), dK(T, d), dV(T, d);
    for (int hd = 0; hd < H; ++hd) {
      const Mat<Real>& P = lc.att[hd];
      const auto Vh = lc.V.middleCols(hd * dh, dh);
      const auto dAh = d_concat.middleCols(hd * dh, dh);
      Mat<Real> dP = dAh * Vh.transpose();
      dV.middleCols(hd * dh, dh) = P.transpose() * dAh;
      // softmax backward; zero columns at masked keys stay zero through P
      Mat<Real> dS(T, T);
      for (int q = 0; q < T; ++q) {
        const Real dot = dP.row(q).cwiseProduct(P.row(q)).sum();
        dS.row(q) = (P.row(q).array() * (dP.row(q).array() - dot)).matrix();
      }
      dS *= scale;
      dQ.middleCols(hd * dh, dh) = dS * lc.K.middleCols(hd * dh, dh);
      dK.middleCols(hd * dh, dh) = dS.transpose() * lc.Q.middleCols(hd * dh, dh);
    }
    grads.at(p + "attn.wq").mat() += dQ.transpose() * lc.x1;
    grads.at(p + "attn.bq").vec() += dQ.colwise().sum().transpose();
    grads.at(p + "attn.wk").mat() += dK.transpose() * lc.x1;
    grads.at(p + "attn.bk").vec() += dK.colwise().sum().transpose();
    grads.at(p + "attn.wv").mat() += dV.transpose() * lc.x1;
    grads.at(p + "attn.bv").vec() += dV.colwise().sum().transpose();
    Mat<Real> dx1 = dQ * params.at(p + "attn.wq").mat() + dK * params.at(p + "attn.wk").mat() +
                    dV * params.at(p + "attn.wv").mat();
    Mat<Real> dh_in_ln;
    detail::layernorm_backward(dx1, lc.ln1_xhat, lc.ln1_rstd, params.at(p + "ln1.g"), dh_in_ln,
                               grads.at(p + "ln1.g"), grads.at(p + "ln1.b"));
    dh_cur = dh_mid + dh_in_ln;
  }

  if (cache.emb_drop.size()) dh_cur.array() *= cache.emb_drop.array();
  auto dtok = grads.at("emb.tok").mat();
  auto dpos = grads.at("emb.pos").mat();
  auto dseg = grads.at("emb.seg").mat();
  for (int t = 0; t < T; ++t) {
    if (!enc.attention_mask[t]) continue;
    dtok.row(enc.ids[t]) += dh_cur.row(t);
    dpos.row(t) += dh_cur.row(t);
    dseg.row(enc.segment_ids[t]) += dh_cur.row(t);
  }
}

}  // namespace mseqa

#endif
