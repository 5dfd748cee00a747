#ifndef MSEQA_RNG_HPP
#define MSEQA_RNG_HPP

#include <cmath>
#include <cstdint>
#include <vector>

namespace mseqa {

// SplitMix64 (Steele, Lea, Flood 2014). Chosen because the algorithm is a
// one-liner that any implementation can reproduce bit-for-bit, which is what
// dataset determinism rests on. Child streams are derived by hashing a
// (seed, stream index) pair through the same mixer.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Unbiased integer in [0, n). n must be > 0.
  uint64_t next_below(uint64_t n) {
    const uint64_t threshold = (0 - n) % n;
    for (;;) {
      const uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double next_real() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Box-Muller, no cached spare (keeps the stream position predictable).
  double next_normal() {
    double u1 = next_real();
    while (u1 <= 0.0) u1 = next_real();
    const double u2 = next_real();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Normal(0, std) resampled until within +-2 std.
  double next_trunc_normal(double std_dev) {
    for (;;) {
      const double x = next_normal();
      if (std::abs(x) <= 2.0) return x * std_dev;
    }
  }

  bool next_bernoulli(double p) { return next_real() < p; }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<size_t>(next_below(v.size()))];
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Child stream for a derived task (per-passage generation, per-epoch
  // shuffles, dropout sites). Independent of the parent's current position.
  Rng child(uint64_t stream) const {
    Rng mix(state_ ^ (0xD1B54A32D192ED03ULL * (stream + 1)));
    return Rng(mix.next_u64());
  }

 private:
  uint64_t state_;
};

}  // namespace mseqa

#endif
