// include/sfl/encoder/encoder.h
//
// Strict chunked streaming. Features are cut into raw-frame chunks of
// chunk_ms before subsampling and no acoustic state crosses a chunk edge.
//
//   encode_incremental   runs each chunk through the whole encoder alone;
//                        attention cost is linear in utterance length.
//   encode_masked_batch  runs the whole utterance at once with a
//                        block-diagonal attention mask and per-chunk
//                        convolutions; attention cost is quadratic.
//
// Both produce the same outputs when no extra band mask is applied.

#pragma once

#include <cstddef>
#include <optional>

#include "sfl/attention/mask.h"
#include "sfl/attention/stats.h"
#include "sfl/encoder/model.h"

namespace sfl {

// floor(floor(T / 2) / 2).
inline std::size_t SubsampledLength(std::size_t t) { return (t / 2) / 2; }

template <typename Real>
Tensor<Real> subsample(const Tensor<Real> &features,
                       const SubsamplingWeights<Real> &w);

struct BlockOptions {
  const AttentionMask *mask = nullptr;  // null attends within the input
  std::size_t segment_frames = 0;       // conv/deform slice length, 0 = all
  bool keep_maps = false;
};

template <typename Real>
struct BlockOutput {
  Tensor<Real> y;
  Tensor<Real> maps;  // [heads, T, T] when kept and the block has attention
};

template <typename Real>
BlockOutput<Real> block_forward(const Tensor<Real> &x,
                                const ConformerBlock<Real> &block,
                                const BlockOptions &options = {});

struct EncodeOptions {
  bool collect_stats = false;  // mean attention maps (baseline only)
};

template <typename Real>
struct EncodeResult {
  Tensor<Real> outputs;                 // [T', d_model]
  std::optional<AttentionStats> stats;  // present when collected
};

// Zero-pads features to a whole number of chunks.
template <typename Real>
Tensor<Real> pad_to_chunk(const Tensor<Real> &features, const ChunkSpec &chunk);

template <typename Real>
EncodeResult<Real> encode_incremental(const Tensor<Real> &features,
                                      const EncoderModel<Real> &model,
                                      const ChunkSpec &chunk,
                                      const EncodeOptions &options = {});

// extra_band: odd count of central diagonals kept inside each chunk.
template <typename Real>
EncodeResult<Real> encode_masked_batch(
    const Tensor<Real> &features, const EncoderModel<Real> &model,
    const ChunkSpec &chunk, std::optional<std::size_t> extra_band = std::nullopt,
    const EncodeOptions &options = {});

}  // namespace sfl
