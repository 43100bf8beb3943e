// src/encoder/encoder.cc

#include "sfl/encoder/encoder.h"

#include <vector>

#include "sfl/numerics/ops.h"

namespace sfl {
namespace {

template <typename Real>
Tensor<Real> Norm(const Tensor<Real> &x, const NormWeights<Real> &n) {
  return layer_norm(x, n.gamma, n.beta);
}

template <typename Real>
Tensor<Real> FeedForward(const Tensor<Real> &x,
                         const FeedForwardWeights<Real> &f) {
  Tensor<Real> h = linear(Norm(x, f.norm), f.up.weight, f.up.bias);
  SwishInPlace(h);
  return linear(h, f.down.weight, f.down.bias);
}

// Applies fn to consecutive row slices of `segment` rows and stitches the
// results back together.
template <typename Real, typename Fn>
Tensor<Real> PerSegment(const Tensor<Real> &x, std::size_t segment, Fn fn) {
  const std::size_t t = x.dim(0);
  if (segment == 0 || segment >= t) return fn(x);
  std::vector<Tensor<Real>> parts;
  parts.reserve((t + segment - 1) / segment);
  for (std::size_t s = 0; s < t; s += segment)
    parts.push_back(fn(x.slice_rows(s, std::min(t, s + segment))));
  return ConcatRows<Real>(parts);
}

template <typename Real>
Tensor<Real> ConvModule(const Tensor<Real> &x, const ConvModuleWeights<Real> &c,
                        std::size_t segment) {
  const Tensor<Real> gated = glu(
      linear(Norm(x, c.norm), c.pointwise_in.weight, c.pointwise_in.bias));
  Tensor<Real> h = PerSegment(gated, segment, [&](const Tensor<Real> &s) {
    return depthwise_conv1d(s, c.depthwise_kernel, c.depthwise_bias);
  });
  h = Norm(h, c.depthwise_norm);
  SwishInPlace(h);
  return linear(h, c.pointwise_out.weight, c.pointwise_out.bias);
}

}  // namespace

template <typename Real>
Tensor<Real> subsample(const Tensor<Real> &features,
                       const SubsamplingWeights<Real> &w) {
  RequireRank(features.shape(), 2, "subsample");
  const std::size_t t = features.dim(0), f = features.dim(1);
  if (t < 4) {
    throw InputTooShortError("subsample: need at least 4 frames, got " +
                             std::to_string(t));
  }
  if (w.conv1.weight.dim(0) != 2 * f) {
    throw DimensionError("subsample: feature width " + std::to_string(f) +
                         " vs first layer " +
                         ShapeToString(w.conv1.weight.shape()));
  }
  // Kernel 2, stride 2: frame pairs (2i, 2i+1) are one contiguous row.
  const std::size_t t1 = t / 2;
  Tensor<Real> h = linear(
      features.slice_rows(0, 2 * t1).reshaped(Shape{t1, 2 * f}),
      w.conv1.weight, w.conv1.bias);
  SwishInPlace(h);
  const std::size_t d = h.dim(1), t2 = t1 / 2;
  h = linear(h.slice_rows(0, 2 * t2).reshaped(Shape{t2, 2 * d}),
             w.conv2.weight, w.conv2.bias);
  SwishInPlace(h);
  return linear(h, w.proj.weight, w.proj.bias);
}

template <typename Real>
BlockOutput<Real> block_forward(const Tensor<Real> &x,
                                const ConformerBlock<Real> &block,
                                const BlockOptions &options) {
  BlockOutput<Real> out;
  Tensor<Real> h = x;
  AddInPlace(h, FeedForward(h, block.ffn1), Real(0.5));

  if (const auto *attn = std::get_if<MhsaWeights<Real>>(&block.middle)) {
    auto a = mhsa_forward(Norm(h, block.middle_norm), *attn, options.mask,
                          options.keep_maps);
    AddInPlace(h, a.y);
    out.maps = std::move(a.maps);
  } else if (const auto *deform =
                 std::get_if<DeformModuleWeights<Real>>(&block.middle)) {
    const Tensor<Real> normed = Norm(h, block.middle_norm);
    AddInPlace(h, PerSegment(normed, options.segment_frames,
                             [&](const Tensor<Real> &s) {
                               return deform_module_forward(s, *deform);
                             }));
  }

  AddInPlace(h, ConvModule(h, block.conv, options.segment_frames));
  AddInPlace(h, FeedForward(h, block.ffn2), Real(0.5));
  out.y = Norm(h, block.final_norm);
  return out;
}

template <typename Real>
Tensor<Real> pad_to_chunk(const Tensor<Real> &features, const ChunkSpec &chunk) {
  RequireRank(features.shape(), 2, "pad_to_chunk");
  const std::size_t t = features.dim(0), f = features.dim(1);
  const std::size_t padded =
      (t + chunk.raw_frames - 1) / chunk.raw_frames * chunk.raw_frames;
  Tensor<Real> out(Shape{padded, f});
  std::copy(features.storage().begin(), features.storage().end(), out.data());
  return out;
}

namespace {

template <typename Real>
void CheckChunking(const Tensor<Real> &features,
                   const EncoderModel<Real> &model, const ChunkSpec &chunk) {
  RequireRank(features.shape(), 2, "encode");
  if (features.dim(1) != model.config.feature_dim) {
    throw DimensionError("encode: feature width " +
                         std::to_string(features.dim(1)) + " vs config " +
                         std::to_string(model.config.feature_dim));
  }
  const std::size_t frame_ms =
      model.config.frame_hop_ms * model.config.subsample_factor;
  if (chunk.raw_frames * model.config.frame_hop_ms != chunk.chunk_ms ||
      chunk.frames_per_chunk * frame_ms != chunk.chunk_ms) {
    throw ConfigError("chunk of " + std::to_string(chunk.chunk_ms) +
                      " ms does not match the configured frame rate");
  }
  if (features.dim(0) == 0 || features.dim(0) % chunk.raw_frames != 0) {
    throw ConfigError("encode: " + std::to_string(features.dim(0)) +
                      " frames is not a whole number of " +
                      std::to_string(chunk.raw_frames) +
                      "-frame chunks; pad first");
  }
}

template <typename Real>
std::optional<AttentionStats> MaybeStats(const EncoderModel<Real> &model,
                                         const ChunkSpec &chunk,
                                         const EncodeOptions &options) {
  if (!options.collect_stats || model.config.variant != Variant::kBaseline)
    return std::nullopt;
  return AttentionStats(model.blocks.size(), chunk.frames_per_chunk);
}

}  // namespace

template <typename Real>
EncodeResult<Real> encode_incremental(const Tensor<Real> &features,
                                      const EncoderModel<Real> &model,
                                      const ChunkSpec &chunk,
                                      const EncodeOptions &options) {
  CheckChunking(features, model, chunk);
  EncodeResult<Real> result;
  result.stats = MaybeStats(model, chunk, options);
  const std::size_t n_chunks = features.dim(0) / chunk.raw_frames;
  std::vector<Tensor<Real>> outputs;
  outputs.reserve(n_chunks);
  BlockOptions block_options;
  block_options.keep_maps = result.stats.has_value();
  for (std::size_t c = 0; c < n_chunks; ++c) {
    Tensor<Real> h = subsample(
        features.slice_rows(c * chunk.raw_frames, (c + 1) * chunk.raw_frames),
        model.subsampling);
    for (std::size_t l = 0; l < model.blocks.size(); ++l) {
      auto out = block_forward(h, model.blocks[l], block_options);
      if (result.stats) result.stats->accumulate(out.maps, l);
      h = std::move(out.y);
    }
    outputs.push_back(std::move(h));
  }
  result.outputs = ConcatRows<Real>(outputs);
  return result;
}

template <typename Real>
EncodeResult<Real> encode_masked_batch(const Tensor<Real> &features,
                                       const EncoderModel<Real> &model,
                                       const ChunkSpec &chunk,
                                       std::optional<std::size_t> extra_band,
                                       const EncodeOptions &options) {
  CheckChunking(features, model, chunk);
  EncodeResult<Real> result;
  result.stats = MaybeStats(model, chunk, options);

  // Chunk boundaries fall on multiples of 4 raw frames, so subsampling the
  // whole sequence never mixes frames of different chunks.
  Tensor<Real> h = subsample(features, model.subsampling);
  const std::size_t t = h.dim(0);
  std::optional<AttentionMask> mask;
  if (model.config.variant == Variant::kBaseline) {
    mask = chunk_mask(t, chunk.frames_per_chunk);
    if (extra_band) mask = combine_masks(*mask, band_mask(t, *extra_band));
  } else if (extra_band && *extra_band % 2 == 0) {
    throw ConfigError("extra band must be odd, got " +
                      std::to_string(*extra_band));
  }

  BlockOptions block_options;
  block_options.mask = mask ? &*mask : nullptr;
  block_options.segment_frames = chunk.frames_per_chunk;
  block_options.keep_maps = result.stats.has_value();
  for (std::size_t l = 0; l < model.blocks.size(); ++l) {
    auto out = block_forward(h, model.blocks[l], block_options);
    if (result.stats) result.stats->accumulate_blocks(out.maps, l);
    h = std::move(out.y);
  }
  result.outputs = std::move(h);
  return result;
}

#define SFL_INSTANTIATE_ENCODER(Real)                                         \
  template Tensor<Real> subsample(const Tensor<Real> &,                       \
                                  const SubsamplingWeights<Real> &);          \
  template BlockOutput<Real> block_forward(                                   \
      const Tensor<Real> &, const ConformerBlock<Real> &, const BlockOptions &); \
  template Tensor<Real> pad_to_chunk(const Tensor<Real> &, const ChunkSpec &); \
  template EncodeResult<Real> encode_incremental(                             \
      const Tensor<Real> &, const EncoderModel<Real> &, const ChunkSpec &,    \
      const EncodeOptions &);                                                 \
  template EncodeResult<Real> encode_masked_batch(                            \
      const Tensor<Real> &, const EncoderModel<Real> &, const ChunkSpec &,    \
      std::optional<std::size_t>, const EncodeOptions &);

SFL_INSTANTIATE_ENCODER(float)
SFL_INSTANTIATE_ENCODER(double)

#undef SFL_INSTANTIATE_ENCODER

}  // namespace sfl
