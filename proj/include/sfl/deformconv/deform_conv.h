// include/sfl/deformconv/deform_conv.h
//
// 1-D deformable convolution (offsets only, no modulation). A pointwise
// offset convolution predicts one real offset per timestep, offset group
// and kernel tap; the grouped output convolution then samples its taps at
//
//   s = p + (k - K/2) + offset[p, g, k]
//
// with linear interpolation between x[floor(s)] and x[floor(s) + 1].
// Samples read zero outside [0, T-1], as in a zero-padded convolution.

#pragma once

#include <cstddef>

#include "sfl/numerics/rng.h"
#include "sfl/numerics/tensor.h"

namespace sfl {

template <typename Real>
struct DeformWeights {
  Tensor<Real> output_kernel;  // [C_out, C_in / groups, K]
  Tensor<Real> output_bias;    // [C_out]
  Tensor<Real> offset_kernel;  // [K * offset_groups, C_in]
  Tensor<Real> offset_bias;    // [K * offset_groups]
  std::size_t k = 1;
  std::size_t groups = 1;
  std::size_t offset_groups = 1;

  std::size_t out_channels() const { return output_kernel.dim(0); }
  std::size_t in_channels() const { return offset_kernel.dim(1); }

  void Validate() const;

  static DeformWeights Zeros(std::size_t c_in, std::size_t c_out,
                             std::size_t k, std::size_t groups,
                             std::size_t offset_groups);
  // Glorot output kernel; zero offset predictor so training would start
  // from a standard convolution.
  static DeformWeights Random(Rng &rng, std::size_t c_in, std::size_t c_out,
                              std::size_t k, std::size_t groups,
                              std::size_t offset_groups);
  static std::size_t ParameterCount(std::size_t c_in, std::size_t c_out,
                                    std::size_t k, std::size_t groups,
                                    std::size_t offset_groups);
};

template <typename Real>
struct DeformGrads {
  Tensor<Real> x;
  DeformWeights<Real> w;
};

// Fractional input position read by tap k at output position p.
inline double SamplePosition(std::size_t p, std::size_t k, std::size_t kernel,
                             double offset) {
  return static_cast<double>(p) + static_cast<double>(k) -
         static_cast<double>(kernel / 2) + offset;
}

// [T, offset_groups, K]; unbounded.
template <typename Real>
Tensor<Real> predict_offsets(const Tensor<Real> &x, const DeformWeights<Real> &w);

template <typename Real>
Tensor<Real> deform_conv1d_forward(const Tensor<Real> &x,
                                   const DeformWeights<Real> &w,
                                   const Tensor<Real> &offsets);

// Gradients of deform_conv1d_forward(x, w, predict_offsets(x, w)) with
// respect to x and all four weight tensors. The offset path is included.
template <typename Real>
DeformGrads<Real> deform_conv1d_backward(const Tensor<Real> &x,
                                         const DeformWeights<Real> &w,
                                         const Tensor<Real> &upstream);

template <typename Real>
struct DeformModuleWeights {
  DeformWeights<Real> conv;
  Tensor<Real> norm_gamma;  // [D]
  Tensor<Real> norm_beta;   // [D]

  static DeformModuleWeights Random(Rng &rng, std::size_t d, std::size_t k,
                                    std::size_t groups);
  static std::size_t ParameterCount(std::size_t d, std::size_t k,
                                    std::size_t groups);
};

// swish(layer_norm(deform_conv(x))).
template <typename Real>
Tensor<Real> deform_module_forward(const Tensor<Real> &x,
                                   const DeformModuleWeights<Real> &w);

}  // namespace sfl
