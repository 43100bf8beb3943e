// include/sfl/numerics/rng.h
//
// xoshiro256** seeded through splitmix64. The value stream depends only on
// the seed, so initializations are bit-identical across platforms.

#pragma once

#include <array>
#include <cstdint>

#include "sfl/numerics/tensor.h"

namespace sfl {

class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Standard normal via Box-Muller.
  double normal();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  const std::array<std::uint64_t, 4> &state() const { return s_; }

 private:
  std::array<std::uint64_t, 4> s_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Glorot-uniform weights: U[-s, s], s = sqrt(6 / (fan_in + fan_out)).
// Values are drawn in double and rounded to Real so float and double models
// built from one seed agree up to rounding.
template <typename Real>
Tensor<Real> XavierUniform(Rng &rng, Shape shape, std::size_t fan_in,
                           std::size_t fan_out);

template <typename Real>
Tensor<Real> UniformTensor(Rng &rng, Shape shape, double lo, double hi);

template <typename Real>
Tensor<Real> NormalTensor(Rng &rng, Shape shape, double stddev = 1.0);

}  // namespace sfl
