#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "glarc/tensor.hpp"

namespace glarc {

// Deterministic random source. The bit stream is mt19937_64 (exactly pinned
// by the C++ standard); all derived draws use the documented transforms
// below, so the full stream is reproducible across platforms and library
// versions given the same seed.
//
// Stream order: every call consumes bits strictly in call order.
//   uniform01(): one u64 draw, (x >> 11) * 2^-53, in [0, 1).
//   normal():    Box-Muller on two uniform01 draws; the pair is produced
//                together and the second value is returned by the next call
//                (which then consumes no bits).
//   below(n):    rejection sampling on u64 draws, uniform over [0, n).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double normal();

  // Uniform integer in [0, n); n must be > 0.
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Gaussian-initialized tensor with mean 0 and the given stddev (> 0).
Tensor gaussian_init(std::vector<int> shape, double stddev, Rng& rng);

// In-place Fisher-Yates shuffle driven by Rng::below, back to front.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace glarc
