// include/sfl/attention/mask.h
//
// Binary [T, T] attention masks: chunk block-diagonal structure and the
// central-band restriction that keeps only n_diag diagonals.

#pragma once

#include <cstddef>
#include <string>

#include "sfl/numerics/ops.h"

namespace sfl {

enum class MaskKind { kFull, kBand, kChunk, kBandAndChunk };

struct MaskProvenance {
  MaskKind kind = MaskKind::kFull;
  std::size_t n_diag = 0;        // kBand / kBandAndChunk
  std::size_t chunk_frames = 0;  // kChunk / kBandAndChunk

  std::string ToString() const;
};

class AttentionMask {
 public:
  AttentionMask(BinaryMask bits, MaskProvenance provenance);

  std::size_t t() const { return bits_.dim(0); }
  const BinaryMask &bits() const { return bits_; }
  const MaskProvenance &provenance() const { return provenance_; }
  bool allowed(std::size_t i, std::size_t j) const { return bits_(i, j) != 0; }

  std::size_t count_ones() const;
  double density() const;
  // Ones inside the diagonal block [begin, begin + len)^2.
  std::size_t count_ones_in_block(std::size_t begin, std::size_t len) const;

 private:
  BinaryMask bits_;
  MaskProvenance provenance_;
};

AttentionMask full_mask(std::size_t t);

// bits[i][j] = 1 iff |i - j| <= n_diag / 2. n_diag must be odd.
AttentionMask band_mask(std::size_t t, std::size_t n_diag);

// bits[i][j] = 1 iff i and j fall in the same chunk of chunk_frames.
AttentionMask chunk_mask(std::size_t t, std::size_t chunk_frames);

// Elementwise AND.
AttentionMask combine_masks(const AttentionMask &a, const AttentionMask &b);

// t * n - h * (h + 1), h = n / 2, valid for odd n <= 2t - 1.
std::size_t BandOnesClosedForm(std::size_t t, std::size_t n_diag);

}  // namespace sfl
