// src/attention/mask.cc

#include "sfl/attention/mask.h"

#include <algorithm>

namespace sfl {

std::string MaskProvenance::ToString() const {
  switch (kind) {
    case MaskKind::kFull:
      return "full";
    case MaskKind::kBand:
      return "band(" + std::to_string(n_diag) + ")";
    case MaskKind::kChunk:
      return "chunk(" + std::to_string(chunk_frames) + ")";
    case MaskKind::kBandAndChunk:
      return "band_and_chunk(" + std::to_string(n_diag) + "," +
             std::to_string(chunk_frames) + ")";
  }
  return "unknown";
}

AttentionMask::AttentionMask(BinaryMask bits, MaskProvenance provenance)
    : bits_(std::move(bits)), provenance_(provenance) {
  if (bits_.rank() != 2 || bits_.dim(0) != bits_.dim(1)) {
    throw DimensionError("attention mask must be square, got " +
                         ShapeToString(bits_.shape()));
  }
  for (std::size_t i = 0; i < t(); ++i) {
    if (!bits_(i, i)) {
      throw InvalidMaskError("attention mask hides the diagonal at row " +
                             std::to_string(i));
    }
  }
}

std::size_t AttentionMask::count_ones() const {
  return static_cast<std::size_t>(
      std::count_if(bits_.values().begin(), bits_.values().end(),
                    [](std::uint8_t b) { return b != 0; }));
}

double AttentionMask::density() const {
  const double n = static_cast<double>(t());
  return n == 0 ? 0.0 : static_cast<double>(count_ones()) / (n * n);
}

std::size_t AttentionMask::count_ones_in_block(std::size_t begin,
                                               std::size_t len) const {
  if (begin + len > t()) {
    throw DimensionError("mask block [" + std::to_string(begin) + ", " +
                         std::to_string(begin + len) + ") exceeds length " +
                         std::to_string(t()));
  }
  std::size_t n = 0;
  for (std::size_t i = begin; i < begin + len; ++i)
    for (std::size_t j = begin; j < begin + len; ++j) n += bits_(i, j) != 0;
  return n;
}

AttentionMask full_mask(std::size_t t) {
  return AttentionMask(BinaryMask(Shape{t, t}, 1), {MaskKind::kFull, 0, 0});
}

AttentionMask band_mask(std::size_t t, std::size_t n_diag) {
  if (n_diag == 0 || n_diag % 2 == 0) {
    throw ConfigError("band_mask: n_diag must be odd and >= 1, got " +
                      std::to_string(n_diag));
  }
  const std::size_t half = n_diag / 2;
  BinaryMask bits(Shape{t, t}, 0);
  for (std::size_t i = 0; i < t; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(t - 1, i + half);
    for (std::size_t j = lo; j <= hi; ++j) bits(i, j) = 1;
  }
  return AttentionMask(std::move(bits), {MaskKind::kBand, n_diag, 0});
}

AttentionMask chunk_mask(std::size_t t, std::size_t chunk_frames) {
  if (chunk_frames == 0) {
    throw ConfigError("chunk_mask: chunk_frames must be >= 1");
  }
  BinaryMask bits(Shape{t, t}, 0);
  for (std::size_t i = 0; i < t; ++i) {
    const std::size_t start = (i / chunk_frames) * chunk_frames;
    const std::size_t end = std::min(t, start + chunk_frames);
    for (std::size_t j = start; j < end; ++j) bits(i, j) = 1;
  }
  return AttentionMask(std::move(bits), {MaskKind::kChunk, 0, chunk_frames});
}

AttentionMask combine_masks(const AttentionMask &a, const AttentionMask &b) {
  if (a.t() != b.t()) {
    throw DimensionError("combine_masks: length " + std::to_string(a.t()) +
                         " vs " + std::to_string(b.t()));
  }
  BinaryMask bits(Shape{a.t(), a.t()});
  for (std::size_t i = 0; i < bits.size(); ++i)
    bits[i] = a.bits()[i] & b.bits()[i];
  MaskProvenance p{MaskKind::kBandAndChunk,
                   std::max(a.provenance().n_diag, b.provenance().n_diag),
                   std::max(a.provenance().chunk_frames,
                            b.provenance().chunk_frames)};
  return AttentionMask(std::move(bits), p);
}

std::size_t BandOnesClosedForm(std::size_t t, std::size_t n_diag) {
  const std::size_t h = n_diag / 2;
  return t * n_diag - h * (h + 1);
}

}  // namespace sfl
