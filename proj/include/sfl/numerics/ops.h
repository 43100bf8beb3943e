// include/sfl/numerics/ops.h
//
// Deterministic kernels shared by every model component. Weight matrices
// use the [in, out] convention: y = x * W + b.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "sfl/numerics/tensor.h"

namespace sfl {

// Additive value placed on masked scores before exponentiation.
inline constexpr double kMaskedScore = -1e9;
inline constexpr double kLayerNormEps = 1e-5;

using BinaryMask = Tensor<std::uint8_t>;

template <typename Real>
Tensor<Real> matmul(const Tensor<Real> &a, const Tensor<Real> &b);

// a^T * b and a * b^T without materializing the transpose of the caller's
// tensors more than once.
template <typename Real>
Tensor<Real> matmul_tn(const Tensor<Real> &a, const Tensor<Real> &b);
template <typename Real>
Tensor<Real> matmul_nt(const Tensor<Real> &a, const Tensor<Real> &b);

// c[m,n] += a[m,k] * b[k,n], all row-major with explicit leading dims.
// Each output element accumulates over k in increasing order.
template <typename Real>
void GemmAccumulate(const Real *a, std::size_t lda, const Real *b,
                    std::size_t ldb, Real *c, std::size_t ldc, std::size_t m,
                    std::size_t k, std::size_t n);

template <typename Real>
Tensor<Real> transpose(const Tensor<Real> &a);

// x[..., in] * w[in, out] + bias[out]; bias may be empty.
template <typename Real>
Tensor<Real> linear(const Tensor<Real> &x, const Tensor<Real> &w,
                    const Tensor<Real> &bias);

template <typename Real>
void AddInPlace(Tensor<Real> &acc, const Tensor<Real> &x, Real scale = Real(1));

// Softmax over the last axis of scores[..., T, T]. mask is [T, T]; zero
// entries get exactly zero probability.
template <typename Real>
Tensor<Real> masked_softmax(const Tensor<Real> &scores, const BinaryMask &mask);

// In-place variant over a [rows, cols] block. mask may be null (no masking);
// otherwise it points at the first mask row matching the first score row.
template <typename Real>
void MaskedSoftmaxRows(Real *scores, std::size_t rows, std::size_t cols,
                       const std::uint8_t *mask);

// Score gradient of a row softmax given its output probs[..., T, T]:
// probs * (upstream - rowsum(upstream * probs)). Entries with probability
// exactly zero (masked) receive exactly zero gradient.
template <typename Real>
Tensor<Real> masked_softmax_backward(const Tensor<Real> &probs,
                                     const Tensor<Real> &upstream);

template <typename Real>
Tensor<Real> layer_norm(const Tensor<Real> &x, const Tensor<Real> &gamma,
                        const Tensor<Real> &beta,
                        double eps = kLayerNormEps);

template <typename Real>
struct LayerNormGrads {
  Tensor<Real> x, gamma, beta;
};

template <typename Real>
LayerNormGrads<Real> layer_norm_backward(const Tensor<Real> &x,
                                         const Tensor<Real> &gamma,
                                         const Tensor<Real> &upstream,
                                         double eps = kLayerNormEps);

template <typename Real>
Real sigmoid(Real x);

template <typename Real>
Tensor<Real> swish(const Tensor<Real> &x);
template <typename Real>
Tensor<Real> swish_backward(const Tensor<Real> &x, const Tensor<Real> &upstream);
template <typename Real>
void SwishInPlace(Tensor<Real> &x);

template <typename Real>
Tensor<Real> glu(const Tensor<Real> &x);
template <typename Real>
Tensor<Real> glu_backward(const Tensor<Real> &x, const Tensor<Real> &upstream);

// Per-channel convolution, stride 1, (K-1)/2 zeros on each side. Kernels
// longer than the sequence are valid and read only padding beyond it.
template <typename Real>
Tensor<Real> depthwise_conv1d(const Tensor<Real> &x, const Tensor<Real> &kernel,
                              const Tensor<Real> &bias = {});

template <typename Real>
struct LstmWeights {
  Tensor<Real> w_input;   // [D_in, 4H], gate order i, f, g, o
  Tensor<Real> w_hidden;  // [H, 4H]
  Tensor<Real> bias;      // [4H]

  std::size_t hidden() const { return w_hidden.dim(0); }
  std::size_t input() const { return w_input.dim(0); }
};

template <typename Real>
struct LstmState {
  Tensor<Real> h;
  Tensor<Real> c;
};

template <typename Real>
LstmState<Real> lstm_step(const Tensor<Real> &x, const LstmState<Real> &state,
                          const LstmWeights<Real> &w);

}  // namespace sfl
