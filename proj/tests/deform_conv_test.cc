// tests/deform_conv_test.cc

#include <cmath>

#include "doctest.h"
#include "sfl/deformconv/deform_conv.h"
#include "sfl/numerics/finite_diff.h"
#include "sfl/numerics/ops.h"
#include "test_util.h"

namespace sfl {
namespace {

using testing::RandomTensor;

DeformWeights<double> RandomDeform(Rng &rng, std::size_t c, std::size_t k,
                                   std::size_t groups, double offset_scale) {
  auto w = DeformWeights<double>::Zeros(c, c, k, groups, groups);
  w.output_kernel = RandomTensor(rng, w.output_kernel.shape());
  w.output_bias = RandomTensor(rng, w.output_bias.shape());
  w.offset_kernel =
      RandomTensor(rng, w.offset_kernel.shape(), -offset_scale, offset_scale);
  // Half-integer biases keep every sample away from interpolation kinks.
  for (auto &b : w.offset_bias.values())
    b = static_cast<double>(static_cast<long>(rng.below(5)) - 2) + 0.5;
  return w;
}

TEST_CASE("predict_offsets: zero, constant bias and affine oracle") {
  Rng rng(41);
  auto w = DeformWeights<double>::Zeros(4, 4, 3, 2, 2);
  const auto x = RandomTensor(rng, {5, 4});
  const auto zero_off = predict_offsets(x, w);
  for (double v : zero_off.values()) CHECK(v == 0.0);

  auto one = DeformWeights<double>::Zeros(1, 1, 3, 1, 1);
  one.offset_bias = Tensor<double>::Vector({-1, 3, 0});
  const auto off = predict_offsets(RandomTensor(rng, {6, 1}), one);
  for (std::size_t p = 0; p < 6; ++p) {
    CHECK(off(p, 0, 0) == -1.0);
    CHECK(off(p, 0, 1) == 3.0);
    CHECK(off(p, 0, 2) == 0.0);
  }

  auto r = RandomDeform(rng, 4, 3, 2, 1.0);
  const auto got = predict_offsets(x, r);
  for (std::size_t p = 0; p < 5; ++p)
    for (std::size_t g = 0; g < 2; ++g)
      for (std::size_t k = 0; k < 3; ++k) {
        double s = r.offset_bias[g * 3 + k];
        for (std::size_t c = 0; c < 4; ++c) s += r.offset_kernel(g * 3 + k, c) * x(p, c);
        CHECK(got(p, g, k) == doctest::Approx(s).epsilon(1e-14));
      }
}

TEST_CASE("deform_conv1d: offsets [-1, 3, 0] at the third timestep") {
  const double offs[3] = {-1, 3, 0};
  for (std::size_t k = 0; k < 3; ++k) CHECK(SamplePosition(2, k, 3, offs[k]) == (double[]){0, 5, 3}[k]);

  // One-hot taps read the sampled input value back out.
  Tensor<double> x(Shape{8, 1});
  for (std::size_t t = 0; t < 8; ++t) x(t, 0) = 10.0 + t;
  for (std::size_t tap = 0; tap < 3; ++tap) {
    auto w = DeformWeights<double>::Zeros(1, 1, 3, 1, 1);
    w.output_kernel(0, 0, tap) = 1;
    w.offset_bias = Tensor<double>::Vector({-1, 3, 0});
    const auto y = deform_conv1d_forward(x, w, predict_offsets(x, w));
    CHECK(y(2, 0) == 10.0 + (double[]){0, 5, 3}[tap]);
  }
}

TEST_CASE("deform_conv1d: zero offsets reduce to grouped convolution") {
  Rng rng(42);
  for (std::size_t t = 1; t <= 32; ++t)
    for (std::size_t c = 1; c <= 8; ++c)
      for (std::size_t k : {3, 5})
        for (std::size_t groups : {1, 2, 4}) {
          if (c % groups) continue;
          auto w = DeformWeights<double>::Zeros(c, c, k, groups, groups);
          w.output_kernel = RandomTensor(rng, w.output_kernel.shape());
          w.output_bias = RandomTensor(rng, w.output_bias.shape());
          const auto x = RandomTensor(rng, {t, c});
          const auto y = deform_conv1d_forward(
              x, w, Tensor<double>(Shape{t, groups, k}));
          const auto ref =
              testing::GroupedConv(x, w.output_kernel, w.output_bias, groups);
          REQUIRE(MaxRelativeDifference(y, ref) <= 1e-12);
        }
}

TEST_CASE("deform_conv1d: integer offsets are shifted taps") {
  Rng rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t t = 3 + rng.below(10), c = 4, k = 3, groups = 2;
    auto w = DeformWeights<double>::Zeros(c, c, k, groups, groups);
    w.output_kernel = RandomTensor(rng, w.output_kernel.shape());
    const auto x = RandomTensor(rng, {t, c});
    Tensor<double> off(Shape{t, groups, k});
    for (auto &v : off.values()) v = double(long(rng.below(9)) - 4);
    const auto y = deform_conv1d_forward(x, w, off);
    const auto ref = testing::ShiftedGroupedConv(
        x, w.output_kernel, w.output_bias, groups,
        [&](std::size_t p, std::size_t ci, std::size_t j) {
          return long(off(p, ci / (c / groups), j));
        });
    CHECK(MaxRelativeDifference(y, ref) <= 1e-12);
  }
}

TEST_CASE("deform_conv1d: half offsets on a ramp sample the midpoint") {
  Tensor<double> x(Shape{6, 1});
  for (std::size_t t = 0; t < 6; ++t) x(t, 0) = double(t);
  auto w = DeformWeights<double>::Zeros(1, 1, 1, 1, 1);
  w.output_kernel(0, 0, 0) = 1;
  const auto y = deform_conv1d_forward(x, w, Tensor<double>(Shape{6, 1, 1}, 0.5));
  for (std::size_t p = 0; p < 5; ++p) CHECK(y(p, 0) == p + 0.5);
  CHECK(y(5, 0) == 0.5 * 5.0);  // upper neighbour is padding
}

TEST_CASE("deform_conv1d: translation with corrected offsets") {
  Rng rng(44);
  const std::size_t t = 12, c = 4, k = 3;
  auto w = RandomDeform(rng, c, k, 2, 0.0);
  const auto x = RandomTensor(rng, {t, c});
  Tensor<double> off(Shape{t, 2, k});
  for (auto &v : off.values()) v = rng.uniform(-0.9, 0.9);
  // x'[t] = x[t + 1] and offsets - 1 read the same samples.
  Tensor<double> xs(Shape{t, c});
  for (std::size_t p = 0; p + 1 < t; ++p)
    for (std::size_t ch = 0; ch < c; ++ch) xs(p, ch) = x(p + 1, ch);
  auto off_shift = off;
  for (auto &v : off_shift.values()) v -= 1;
  const auto y = deform_conv1d_forward(x, w, off);
  const auto ys = deform_conv1d_forward(xs, w, off_shift);
  for (std::size_t p = 3; p + 3 < t; ++p)
    for (std::size_t ch = 0; ch < c; ++ch)
      CHECK(ys(p, ch) == doctest::Approx(y(p, ch)).epsilon(1e-13));
}

TEST_CASE("deform_conv1d: output depends only on the sampled window") {
  Rng rng(45);
  const std::size_t t = 16, c = 2, k = 3;
  auto w = RandomDeform(rng, c, k, 1, 0.0);
  w.offset_bias = Tensor<double>::Vector({-1.5, 0.25, 2.5});
  const auto x = RandomTensor(rng, {t, c});
  const auto off = predict_offsets(x, w);
  const auto y = deform_conv1d_forward(x, w, off);
  // Window: [p - 1 - 1.5, p + 1 + 2.5] -> integer support [p-3, p+4].
  for (std::size_t q = 0; q < t; ++q) {
    auto xp = x;
    xp(q, 0) += 1.0;
    const auto yp = deform_conv1d_forward(xp, w, off);
    for (std::size_t p = 0; p < t; ++p) {
      const long lo = long(p) - 3, hi = long(p) + 4;
      if (long(q) < lo || long(q) > hi) {
        CHECK(yp(p, 0) == y(p, 0));
        CHECK(yp(p, 1) == y(p, 1));
      }
    }
  }
}

double WeightedSum(const Tensor<double> &y, const Tensor<double> &r) {
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * r[i];
  return s;
}

TEST_CASE("deform_conv1d_backward: zero upstream") {
  Rng rng(46);
  const auto w = RandomDeform(rng, 4, 5, 2, 0.05);
  const auto g = deform_conv1d_backward(RandomTensor(rng, {8, 4}), w,
                                        Tensor<double>(Shape{8, 4}));
  for (const Tensor<double> *t : {&g.x, &g.w.output_kernel, &g.w.output_bias,
                                  &g.w.offset_kernel, &g.w.offset_bias})
    for (double v : t->values()) CHECK(v == 0.0);
}

TEST_CASE("deform_conv1d_backward: matches finite differences over 100 seeds") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(1000 + seed);
    auto w = RandomDeform(rng, 4, 5, 2, 0.05);
    auto x = RandomTensor(rng, {8, 4});
    const auto r = RandomTensor(rng, {8, 4});
    const auto g = deform_conv1d_backward(x, w, r);
    auto loss = [&] {
      return WeightedSum(deform_conv1d_forward(x, w, predict_offsets(x, w)), r);
    };
    REQUIRE(NormRelativeError(g.x, finite_diff_inplace(loss, x)) < 1e-5);
    REQUIRE(NormRelativeError(g.w.output_kernel,
                              finite_diff_inplace(loss, w.output_kernel)) < 1e-5);
    REQUIRE(NormRelativeError(g.w.output_bias,
                              finite_diff_inplace(loss, w.output_bias)) < 1e-5);
    REQUIRE(NormRelativeError(g.w.offset_kernel,
                              finite_diff_inplace(loss, w.offset_kernel)) < 1e-5);
    REQUIRE(NormRelativeError(g.w.offset_bias,
                              finite_diff_inplace(loss, w.offset_bias)) < 1e-5);
  }
}

TEST_CASE("deform_conv1d_backward: fully out-of-range taps carry no gradient") {
  Rng rng(47);
  auto w = RandomDeform(rng, 2, 3, 1, 0.0);
  w.offset_bias = Tensor<double>::Vector({-10.5, 0.25, 0.5});
  const auto x = RandomTensor(rng, {6, 2});
  const auto r = RandomTensor(rng, {6, 2});
  const auto g = deform_conv1d_backward(x, w, r);
  CHECK(g.w.offset_bias[0] == 0.0);
  for (std::size_t c = 0; c < 2; ++c) CHECK(g.w.offset_kernel(0, c) == 0.0);
  auto no_tap = w;
  for (std::size_t co = 0; co < 2; ++co)
    for (std::size_t ci = 0; ci < 2; ++ci) no_tap.output_kernel(co, ci, 0) = 0;
  const auto g2 = deform_conv1d_backward(x, no_tap, r);
  CHECK(MaxRelativeDifference(g.x, g2.x) == 0.0);
}

TEST_CASE("deform_module_forward: zeros, reduction and composition") {
  Rng rng(48);
  auto m = DeformModuleWeights<double>::Random(rng, 8, 5, 2);
  const auto zero_out = deform_module_forward(Tensor<double>(Shape{6, 8}), m);
  for (double v : zero_out.values()) CHECK(v == 0.0);

  const auto x = RandomTensor(rng, {6, 8});
  const auto ref = swish(layer_norm(
      testing::GroupedConv(x, m.conv.output_kernel, m.conv.output_bias, 2),
      m.norm_gamma, m.norm_beta));
  CHECK(MaxRelativeDifference(deform_module_forward(x, m), ref) < 1e-12);

  m.conv.offset_kernel = RandomTensor(rng, m.conv.offset_kernel.shape());
  m.norm_gamma = RandomTensor(rng, {8});
  m.norm_beta = RandomTensor(rng, {8});
  const auto staged = swish(layer_norm(
      deform_conv1d_forward(x, m.conv, predict_offsets(x, m.conv)),
      m.norm_gamma, m.norm_beta));
  CHECK(deform_module_forward(x, m) == staged);
}

TEST_CASE("deform weights: shape validation") {
  CHECK_THROWS_AS(DeformWeights<double>::Zeros(6, 6, 4, 2, 2), ConfigError);
  CHECK_THROWS_AS(DeformWeights<double>::Zeros(6, 6, 3, 4, 4), ConfigError);
  const auto w = DeformWeights<double>::Zeros(4, 4, 3, 2, 2);
  CHECK_THROWS_AS(predict_offsets(Tensor<double>(Shape{5, 3}), w), DimensionError);
  CHECK_THROWS_AS(deform_conv1d_forward(Tensor<double>(Shape{5, 4}), w,
                                        Tensor<double>(Shape{5, 1, 3})),
                  DimensionError);
  CHECK(DeformWeights<double>::ParameterCount(512, 512, 5, 8, 8) ==
        512 * 64 * 5 + 512 + 40 * 512 + 40);
}

}  // namespace
}  // namespace sfl
