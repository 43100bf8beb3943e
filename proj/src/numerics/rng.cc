// src/numerics/rng.cc

#include "sfl/numerics/rng.h"

#include <cmath>
#include <numbers>

namespace sfl {
namespace {

std::uint64_t SplitMix64(std::uint64_t &x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t Rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto &w : s_) w = SplitMix64(x);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = Rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = Rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection sampling, unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % n;
}

template <typename Real>
Tensor<Real> UniformTensor(Rng &rng, Shape shape, double lo, double hi) {
  Tensor<Real> t(std::move(shape));
  for (auto &v : t.values()) v = static_cast<Real>(rng.uniform(lo, hi));
  return t;
}

template <typename Real>
Tensor<Real> XavierUniform(Rng &rng, Shape shape, std::size_t fan_in,
                           std::size_t fan_out) {
  const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return UniformTensor<Real>(rng, std::move(shape), -s, s);
}

template <typename Real>
Tensor<Real> NormalTensor(Rng &rng, Shape shape, double stddev) {
  Tensor<Real> t(std::move(shape));
  for (auto &v : t.values()) v = static_cast<Real>(stddev * rng.normal());
  return t;
}

template Tensor<float> UniformTensor(Rng &, Shape, double, double);
template Tensor<double> UniformTensor(Rng &, Shape, double, double);
template Tensor<float> XavierUniform(Rng &, Shape, std::size_t, std::size_t);
template Tensor<double> XavierUniform(Rng &, Shape, std::size_t, std::size_t);
template Tensor<float> NormalTensor(Rng &, Shape, double);
template Tensor<double> NormalTensor(Rng &, Shape, double);

}  // namespace sfl
