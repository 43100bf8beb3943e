// include/sfl/encoder/params.h

#pragma once

#include <cstddef>

#include "sfl/encoder/config.h"
#include "sfl/transducer/tail.h"

namespace sfl {

struct ParameterBreakdown {
  std::size_t subsampling = 0;
  std::size_t feed_forward = 0;  // both FFNs, all layers
  std::size_t middle = 0;        // attention / deformable module incl. norm
  std::size_t convolution = 0;
  std::size_t final_norms = 0;
  std::size_t transducer = 0;

  std::size_t encoder() const {
    return subsampling + feed_forward + middle + convolution + final_norms;
  }
  std::size_t total() const { return encoder() + transducer; }
};

// Closed-form count matching EncoderModel::Init / TransducerTail::Random
// without allocating anything.
ParameterBreakdown parameter_breakdown(const EncoderConfig &config,
                                       bool include_transducer,
                                       const TransducerDims &dims = {});

inline std::size_t count_parameters(const EncoderConfig &config,
                                    bool include_transducer,
                                    const TransducerDims &dims = {}) {
  return parameter_breakdown(config, include_transducer, dims).total();
}

struct WidthSearchResult {
  EncoderConfig config;
  std::size_t achieved = 0;
};

// Smallest d_model, a multiple of heads and deform_groups, whose count
// reaches target. Throws SearchError if no width up to max_d_model does.
WidthSearchResult ablation_width_search(std::size_t target,
                                        const EncoderConfig &config,
                                        bool include_transducer = false,
                                        const TransducerDims &dims = {},
                                        std::size_t max_d_model = 8192);

}  // namespace sfl
