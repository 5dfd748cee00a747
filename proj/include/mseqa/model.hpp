#ifndef MSEQA_MODEL_HPP
#define MSEQA_MODEL_HPP

#include <cstdint>
#include <string>

#include "mseqa/encoder.hpp"
#include "mseqa/heads.hpp"
#include "mseqa/tokenizer.hpp"

namespace mseqa {

// Encoder plus the four heads share one parameter store; head widths derive
// from the encoder hidden size.
template <typename Real>
ParamStore<Real> build_model_params(const EncoderConfig& cfg, uint64_t seed) {
  cfg.validate();
  ParamStore<Real> store;
  add_encoder_params(store, cfg);
  add_head_params(store, cfg.hidden);
  init_encoder_params(store, cfg, Rng(seed).child(0).next_u64());
  init_head_params(store, cfg.hidden, Rng(seed).child(1).next_u64());
  return store;
}

struct Model {
  EncoderConfig config;
  Vocab vocab;
  ParamStore<float> params;
};

// Checkpoint container: magic "MSEQA1", little-endian u32 header length, a
// JSON header (encoder config, vocab list + hash), then each tensor as
// name, shape, and row-major little-endian f32 data. Bit-exact round trip.
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace mseqa

#endif
