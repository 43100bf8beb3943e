// include/sfl/attention/stats.h
//
// Per-layer mean attention maps at a fixed chunk length. Each sample is a
// head-averaged [T, T] map; the mean is taken over heads, chunks and
// utterances.

#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "sfl/numerics/tensor.h"

namespace sfl {

class AttentionStats {
 public:
  AttentionStats(std::size_t layer_count, std::size_t chunk_length);

  std::size_t layer_count() const { return sums_.size(); }
  std::size_t chunk_length() const { return chunk_length_; }
  std::size_t sample_count(std::size_t layer) const;

  // maps: [heads, T, T] with T == chunk_length().
  template <typename Real>
  void accumulate(const Tensor<Real> &maps, std::size_t layer);

  // Adds the diagonal chunk blocks of a [heads, N, N] masked-batch map, one
  // sample per block.
  template <typename Real>
  void accumulate_blocks(const Tensor<Real> &maps, std::size_t layer);

  // Sums another accumulator into this one (parallel accumulation).
  void merge(const AttentionStats &other);

  Tensor<double> mean(std::size_t layer) const;

  // One CSV per layer (layer_00.csv, ...), row-major, 6 significant digits.
  std::vector<std::filesystem::path> write_csv(
      const std::filesystem::path &dir) const;

 private:
  void CheckLayer(std::size_t layer) const;

  std::size_t chunk_length_;
  std::vector<Tensor<double>> sums_;
  std::vector<std::size_t> counts_;
};

template <typename Real>
inline AttentionStats &accumulate_attention(AttentionStats &stats,
                                            const Tensor<Real> &maps,
                                            std::size_t layer) {
  stats.accumulate(maps, layer);
  return stats;
}

}  // namespace sfl
