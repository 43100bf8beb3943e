// src/encoder/params.cc

#include "sfl/encoder/params.h"

#include <numeric>

#include "sfl/attention/mhsa.h"
#include "sfl/deformconv/deform_conv.h"

namespace sfl {

ParameterBreakdown parameter_breakdown(const EncoderConfig &c,
                                       bool include_transducer,
                                       const TransducerDims &dims) {
  c.Validate();
  const std::size_t d = c.d_model, f = c.feature_dim, layers = c.layers;
  const std::size_t norm = 2 * d;
  ParameterBreakdown b;
  b.subsampling = (2 * f * d + d) + (2 * d * d + d) + (d * d + d);
  const std::size_t ffn = norm + (d * c.ffn_dim + c.ffn_dim) + (c.ffn_dim * d + d);
  b.feed_forward = 2 * ffn * layers;
  switch (c.variant) {
    case Variant::kBaseline:
      b.middle = layers * (norm + MhsaWeights<float>::ParameterCount(d));
      break;
    case Variant::kSoft:
      b.middle = layers * (norm + DeformModuleWeights<float>::ParameterCount(
                                      d, c.deform_kernel, c.deform_groups));
      break;
    case Variant::kHard:
      b.middle = 0;
      break;
  }
  const std::size_t conv = norm + (d * 2 * d + 2 * d) + (d * c.conv_kernel + d) +
                           norm + (d * d + d);
  b.convolution = conv * layers;
  b.final_norms = norm * layers;
  if (include_transducer) {
    b.transducer = TransducerTail<float>::ParameterCount(d, dims);
  }
  return b;
}

WidthSearchResult ablation_width_search(std::size_t target,
                                        const EncoderConfig &config,
                                        bool include_transducer,
                                        const TransducerDims &dims,
                                        std::size_t max_d_model) {
  const std::size_t step = std::lcm(config.heads, config.deform_groups);
  for (std::size_t d = step; d <= max_d_model; d += step) {
    EncoderConfig candidate = config;
    candidate.d_model = d;
    const std::size_t n = count_parameters(candidate, include_transducer, dims);
    if (n >= target) return {candidate, n};
  }
  throw SearchError("no d_model up to " + std::to_string(max_d_model) +
                    " reaches " + std::to_string(target) + " parameters");
}

}  // namespace sfl
