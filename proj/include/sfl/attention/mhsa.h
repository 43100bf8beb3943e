// include/sfl/attention/mhsa.h
//
// Multi-head self-attention with Transformer-XL style relative positions:
//
//   score[h,i,j] = ((q_i + u_h) . k_j + (q_i + v_h) . p_{i-j}) / sqrt(d_k)
//
// where p_r = sinusoid(r) * w_pos. Distances are always i - j of the rows
// passed in, so a chunk processed alone sees the same position terms as the
// same chunk inside a block-diagonal masked sequence.

#pragma once

#include <cstddef>

#include "sfl/attention/mask.h"
#include "sfl/numerics/rng.h"
#include "sfl/numerics/tensor.h"

namespace sfl {

template <typename Real>
struct MhsaWeights {
  Tensor<Real> w_q, w_k, w_v, w_o;  // [D, D]
  Tensor<Real> w_pos;               // [D, D]
  Tensor<Real> u_bias, v_bias;      // [heads, D / heads]
  std::size_t heads = 1;

  std::size_t d_model() const { return w_q.dim(0); }
  std::size_t head_dim() const { return d_model() / heads; }

  // Throws DimensionError / ConfigError on inconsistent shapes.
  void Validate() const;

  static MhsaWeights Zeros(std::size_t d_model, std::size_t heads);
  static MhsaWeights Random(Rng &rng, std::size_t d_model, std::size_t heads);

  // Scalar count: 5 D^2 + 2 D.
  static std::size_t ParameterCount(std::size_t d_model);
};

template <typename Real>
struct MhsaOutput {
  Tensor<Real> y;     // [T, D]
  Tensor<Real> maps;  // [heads, T, T] post-softmax; empty unless requested
};

template <typename Real>
struct MhsaGrads {
  Tensor<Real> x;
  MhsaWeights<Real> w;
};

// Sinusoidal embeddings for distances -(T-1) .. T-1, shape [2T-1, D].
template <typename Real>
Tensor<Real> RelativePositionTable(std::size_t t, std::size_t d_model);

// Row of RelativePositionTable holding distance i - j.
inline std::size_t RelativeIndex(std::size_t i, std::size_t j, std::size_t t) {
  return i + (t - 1) - j;
}

// mask may be null, which attends everywhere.
template <typename Real>
MhsaOutput<Real> mhsa_forward(const Tensor<Real> &x, const MhsaWeights<Real> &w,
                              const AttentionMask *mask, bool keep_maps = true);

template <typename Real>
MhsaGrads<Real> mhsa_backward(const Tensor<Real> &x, const MhsaWeights<Real> &w,
                              const AttentionMask *mask,
                              const Tensor<Real> &upstream);

}  // namespace sfl
