// src/attention/stats.cc

#include "sfl/attention/stats.h"

#include <cstdio>
#include <fstream>

#include "sfl/numerics/errors.h"

namespace sfl {

AttentionStats::AttentionStats(std::size_t layer_count,
                               std::size_t chunk_length)
    : chunk_length_(chunk_length),
      sums_(layer_count, Tensor<double>(Shape{chunk_length, chunk_length})),
      counts_(layer_count, 0) {
  if (chunk_length == 0) throw StatsError("attention stats: zero chunk length");
}

void AttentionStats::CheckLayer(std::size_t layer) const {
  if (layer >= sums_.size()) {
    throw StatsError("attention stats: layer " + std::to_string(layer) +
                     " out of range (" + std::to_string(sums_.size()) +
                     " layers)");
  }
}

std::size_t AttentionStats::sample_count(std::size_t layer) const {
  CheckLayer(layer);
  return counts_[layer];
}

template <typename Real>
void AttentionStats::accumulate(const Tensor<Real> &maps, std::size_t layer) {
  CheckLayer(layer);
  const std::size_t t = chunk_length_;
  if (maps.rank() != 3 || maps.dim(1) != t || maps.dim(2) != t) {
    throw StatsError("attention stats: map shape " +
                     ShapeToString(maps.shape()) + " vs chunk length " +
                     std::to_string(t));
  }
  const std::size_t heads = maps.dim(0);
  Tensor<double> &sum = sums_[layer];
  for (std::size_t h = 0; h < heads; ++h) {
    const Real *m = maps.data() + h * t * t;
    for (std::size_t i = 0; i < t * t; ++i)
      sum[i] += static_cast<double>(m[i]) / static_cast<double>(heads);
  }
  ++counts_[layer];
}

template <typename Real>
void AttentionStats::accumulate_blocks(const Tensor<Real> &maps,
                                       std::size_t layer) {
  CheckLayer(layer);
  const std::size_t t = chunk_length_;
  if (maps.rank() != 3 || maps.dim(1) != maps.dim(2) || maps.dim(1) % t != 0) {
    throw StatsError("attention stats: map shape " +
                     ShapeToString(maps.shape()) +
                     " is not a whole number of chunks of " +
                     std::to_string(t));
  }
  const std::size_t heads = maps.dim(0), n = maps.dim(1);
  Tensor<double> &sum = sums_[layer];
  for (std::size_t start = 0; start < n; start += t) {
    for (std::size_t h = 0; h < heads; ++h) {
      const Real *m = maps.data() + h * n * n;
      for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j < t; ++j)
          sum(i, j) += static_cast<double>(m[(start + i) * n + start + j]) /
                       static_cast<double>(heads);
    }
    ++counts_[layer];
  }
}

void AttentionStats::merge(const AttentionStats &other) {
  if (other.layer_count() != layer_count() ||
      other.chunk_length_ != chunk_length_) {
    throw StatsError("attention stats: cannot merge differently shaped stats");
  }
  for (std::size_t l = 0; l < sums_.size(); ++l) {
    for (std::size_t i = 0; i < sums_[l].size(); ++i)
      sums_[l][i] += other.sums_[l][i];
    counts_[l] += other.counts_[l];
  }
}

Tensor<double> AttentionStats::mean(std::size_t layer) const {
  CheckLayer(layer);
  if (counts_[layer] == 0) {
    throw StatsError("attention stats: layer " + std::to_string(layer) +
                     " has no samples");
  }
  Tensor<double> m = sums_[layer];
  for (auto &v : m.values()) v /= static_cast<double>(counts_[layer]);
  return m;
}

std::vector<std::filesystem::path> AttentionStats::write_csv(
    const std::filesystem::path &dir) const {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (std::size_t l = 0; l < sums_.size(); ++l) {
    char name[32];
    std::snprintf(name, sizeof(name), "layer_%02zu.csv", l);
    const auto path = dir / name;
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    const Tensor<double> m = mean(l);
    char buf[32];
    for (std::size_t i = 0; i < chunk_length_; ++i) {
      for (std::size_t j = 0; j < chunk_length_; ++j) {
        std::snprintf(buf, sizeof(buf), "%.6g", m(i, j));
        out << (j ? "," : "") << buf;
      }
      out << '\n';
    }
    written.push_back(path);
  }
  return written;
}

template void AttentionStats::accumulate(const Tensor<float> &, std::size_t);
template void AttentionStats::accumulate(const Tensor<double> &, std::size_t);
template void AttentionStats::accumulate_blocks(const Tensor<float> &,
                                                std::size_t);
template void AttentionStats::accumulate_blocks(const Tensor<double> &,
                                                std::size_t);

}  // namespace sfl
