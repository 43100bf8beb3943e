// include/sfl/encoder/model.h
//
// Weights of the streaming Conformer encoder. A block is
//
//   x += 1/2 FFN1(x)
//   x += middle(LN(x))      attention (baseline), deformable module (soft),
//                           nothing at all (hard)
//   x += Conv(x)            LN, pointwise D->2D, GLU, depthwise K, LN, swish,
//                           pointwise D->D
//   x += 1/2 FFN2(x)
//   y  = LN(x)

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "sfl/attention/mhsa.h"
#include "sfl/deformconv/deform_conv.h"
#include "sfl/encoder/config.h"

namespace sfl {

template <typename Real>
struct LinearWeights {
  Tensor<Real> weight;  // [in, out]
  Tensor<Real> bias;    // [out]
};

template <typename Real>
struct NormWeights {
  Tensor<Real> gamma;
  Tensor<Real> beta;
};

template <typename Real>
struct FeedForwardWeights {
  NormWeights<Real> norm;
  LinearWeights<Real> up;    // D -> ffn
  LinearWeights<Real> down;  // ffn -> D
};

template <typename Real>
struct ConvModuleWeights {
  NormWeights<Real> norm;
  LinearWeights<Real> pointwise_in;  // D -> 2D, then GLU
  Tensor<Real> depthwise_kernel;     // [D, K]
  Tensor<Real> depthwise_bias;       // [D]
  NormWeights<Real> depthwise_norm;
  LinearWeights<Real> pointwise_out;  // D -> D
};

template <typename Real>
using MiddleModule =
    std::variant<std::monostate, MhsaWeights<Real>, DeformModuleWeights<Real>>;

template <typename Real>
struct ConformerBlock {
  FeedForwardWeights<Real> ffn1;
  NormWeights<Real> middle_norm;  // empty for the hard variant
  MiddleModule<Real> middle;
  ConvModuleWeights<Real> conv;
  FeedForwardWeights<Real> ffn2;
  NormWeights<Real> final_norm;

  Variant variant() const;
};

// Two kernel-2 stride-2 convolutions over time (each followed by swish) and
// a projection to d_model. A stride-2 kernel-2 convolution is a linear map
// of frame pairs, so each is stored as a [2 * C_in, C_out] matrix.
template <typename Real>
struct SubsamplingWeights {
  LinearWeights<Real> conv1;  // [2F, D]
  LinearWeights<Real> conv2;  // [2D, D]
  LinearWeights<Real> proj;   // [D, D]
};

template <typename Real>
struct EncoderModel {
  EncoderConfig config;
  SubsamplingWeights<Real> subsampling;
  std::vector<ConformerBlock<Real>> blocks;

  // Glorot-uniform matrices, zero biases, unit norm gains; deterministic in
  // the seed and identical across Real up to rounding.
  static EncoderModel Init(const EncoderConfig &config, std::uint64_t seed);

  // Every named tensor in a fixed order (checkpoint and counting).
  void ForEachTensor(
      const std::function<void(const std::string &, Tensor<Real> &)> &fn);
  void ForEachTensor(const std::function<void(const std::string &,
                                              const Tensor<Real> &)> &fn) const;

  std::size_t ParameterCount() const;
};

}  // namespace sfl
