// tests/attention_test.cc

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "doctest.h"
#include "sfl/attention/mask.h"
#include "sfl/attention/mhsa.h"
#include "sfl/attention/stats.h"
#include "sfl/numerics/finite_diff.h"
#include "sfl/numerics/ops.h"
#include "test_util.h"

namespace sfl {
namespace {

using testing::RandomTensor;

// Direct loops over heads, rows and columns; the sinusoid is recomputed per
// pair and masked entries are skipped rather than offset.
Tensor<double> NaiveAttention(const Tensor<double> &x,
                              const MhsaWeights<double> &w,
                              const AttentionMask *mask) {
  const std::size_t t = x.dim(0), d = x.dim(1), heads = w.heads, dk = d / heads;
  auto project = [&](const Tensor<double> &m, std::size_t i, std::size_t col) {
    double s = 0;
    for (std::size_t c = 0; c < d; ++c) s += x(i, c) * m(c, col);
    return s;
  };
  auto position = [&](long dist, std::size_t col) {
    double s = 0;
    for (std::size_t c = 0; c < d; ++c) {
      const double freq = std::pow(10000.0, -double(c - c % 2) / double(d));
      const double pe = c % 2 == 0 ? std::sin(dist * freq) : std::cos(dist * freq);
      s += pe * w.w_pos(c, col);
    }
    return s;
  };
  Tensor<double> ctx(Shape{t, d});
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < t; ++i) {
      std::vector<double> score(t, -INFINITY);
      double mx = -INFINITY;
      for (std::size_t j = 0; j < t; ++j) {
        if (mask && !mask->allowed(i, j)) continue;
        double s = 0;
        for (std::size_t c = 0; c < dk; ++c) {
          const std::size_t col = h * dk + c;
          const double q = project(w.w_q, i, col);
          s += (q + w.u_bias(h, c)) * project(w.w_k, j, col);
          s += (q + w.v_bias(h, c)) * position(long(i) - long(j), col);
        }
        score[j] = s / std::sqrt(double(dk));
        mx = std::max(mx, score[j]);
      }
      double z = 0;
      for (std::size_t j = 0; j < t; ++j)
        if (score[j] > -INFINITY) z += std::exp(score[j] - mx);
      for (std::size_t j = 0; j < t; ++j) {
        if (score[j] == -INFINITY) continue;
        const double a = std::exp(score[j] - mx) / z;
        for (std::size_t c = 0; c < dk; ++c)
          ctx(i, h * dk + c) += a * project(w.w_v, j, h * dk + c);
      }
    }
  }
  return testing::NaiveMatmul(ctx, w.w_o);
}

MhsaWeights<double> RandomWeights(Rng &rng, std::size_t d, std::size_t heads) {
  auto w = MhsaWeights<double>::Random(rng, d, heads);
  w.u_bias = RandomTensor(rng, {heads, d / heads}, -0.5, 0.5);
  w.v_bias = RandomTensor(rng, {heads, d / heads}, -0.5, 0.5);
  return w;
}

TEST_CASE("band_mask: retained fractions of a 32-frame chunk") {
  const auto m7 = band_mask(32, 7);
  CHECK(m7.count_ones() == 212);
  CHECK(std::round(m7.density() * 1e4) / 1e4 == doctest::Approx(0.2070));
  CHECK(std::lround(m7.density() * 100) == 21);
  const auto m5 = band_mask(32, 5);
  CHECK(m5.count_ones() == 154);
  CHECK(std::round(m5.density() * 1e4) / 1e4 == doctest::Approx(0.1504));
  CHECK(std::lround(m5.density() * 100) == 15);

  const auto m1 = band_mask(4, 1);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(m1.allowed(i, j) == (i == j));

  CHECK_THROWS_AS(band_mask(8, 4), ConfigError);
  CHECK_THROWS_AS(band_mask(8, 0), ConfigError);
}

TEST_CASE("band_mask: closed form, symmetry and monotonicity (exhaustive)") {
  for (std::size_t t = 1; t <= 64; ++t) {
    for (std::size_t n = 1; n <= 2 * t - 1; n += 2) {
      const auto m = band_mask(t, n);
      std::size_t ones = 0;
      for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j < t; ++j) {
          const bool expect = (i > j ? i - j : j - i) <= n / 2;
          REQUIRE(m.allowed(i, j) == expect);
          REQUIRE(m.allowed(i, j) == m.allowed(j, i));
          ones += expect;
        }
      REQUIRE(m.count_ones() == ones);
      REQUIRE(BandOnesClosedForm(t, n) == ones);
      if (n + 2 <= 2 * t - 1) {
        const auto wider = band_mask(t, n + 2);
        for (std::size_t i = 0; i < m.bits().size(); ++i)
          REQUIRE(m.bits()[i] <= wider.bits()[i]);
      }
    }
    CHECK(band_mask(t, 2 * t - 1).count_ones() == t * t);
  }
}

TEST_CASE("chunk_mask and combine_masks") {
  CHECK(chunk_mask(4, 4).count_ones() == 16);
  const auto c2 = chunk_mask(4, 2);
  CHECK(c2.count_ones() == 8);
  CHECK(c2.allowed(1, 0));
  CHECK(!c2.allowed(1, 2));
  CHECK(c2.allowed(3, 2));
  CHECK(chunk_mask(32, 32).count_ones() == 1024);

  const auto same = combine_masks(band_mask(8, 15), chunk_mask(8, 4));
  CHECK(same.bits() == chunk_mask(8, 4).bits());
  CHECK(same.provenance().kind == MaskKind::kBandAndChunk);

  const auto id = combine_masks(chunk_mask(4, 2), band_mask(4, 1));
  CHECK(id.bits() == band_mask(4, 1).bits());

  const auto banded = combine_masks(chunk_mask(32, 32), band_mask(32, 7));
  std::size_t ones = 0;
  for (std::size_t i = 0; i < 32; ++i)
    for (std::size_t j = 0; j < 32; ++j)
      ones += (i > j ? i - j : j - i) <= 3;
  CHECK(banded.count_ones() == ones);
  CHECK(ones == 212);

  CHECK_THROWS_AS(combine_masks(band_mask(4, 1), band_mask(5, 1)),
                  DimensionError);
}

TEST_CASE("mhsa_forward: matches the per-head loop oracle") {
  Rng rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const auto w = RandomWeights(rng, 8, 2);
    const auto x = RandomTensor(rng, {6, 8});
    CHECK(MaxRelativeDifference(mhsa_forward(x, w, nullptr).y,
                                NaiveAttention(x, w, nullptr)) < 1e-12);
    const auto mask = combine_masks(chunk_mask(6, 3), band_mask(6, 3));
    CHECK(MaxRelativeDifference(mhsa_forward(x, w, &mask).y,
                                NaiveAttention(x, w, &mask)) < 1e-12);
  }
}

TEST_CASE("mhsa_forward: diagonal-only attention ignores other positions") {
  Rng rng(22);
  const auto w = RandomWeights(rng, 8, 2);
  const auto x = RandomTensor(rng, {5, 8});
  const auto diag = band_mask(5, 1);
  const auto y = mhsa_forward(x, w, &diag).y;
  for (std::size_t j = 0; j < 5; ++j) {
    auto xp = x;
    for (std::size_t c = 0; c < 8; ++c) xp(j, c) += 0.37;
    const auto yp = mhsa_forward(xp, w, &diag).y;
    for (std::size_t i = 0; i < 5; ++i) {
      if (i == j) continue;
      for (std::size_t c = 0; c < 8; ++c) CHECK(yp(i, c) == y(i, c));
    }
  }
}

TEST_CASE("mhsa_forward: zero scores average the unmasked values") {
  auto w = MhsaWeights<double>::Zeros(4, 2);
  for (std::size_t i = 0; i < 4; ++i) w.w_v(i, i) = w.w_o(i, i) = 1;
  Rng rng(23);
  const auto x = RandomTensor(rng, {6, 4});
  const auto mask = chunk_mask(6, 3);
  const auto out = mhsa_forward(x, w, &mask);
  for (std::size_t i = 0; i < 6; ++i) {
    const std::size_t start = (i / 3) * 3;
    for (std::size_t c = 0; c < 4; ++c) {
      const double mean = (x(start, c) + x(start + 1, c) + x(start + 2, c)) / 3;
      CHECK(out.y(i, c) == doctest::Approx(mean).epsilon(1e-14));
    }
  }
  for (std::size_t h = 0; h < 2; ++h)
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j)
        CHECK(out.maps(h, i, j) == doctest::Approx(mask.allowed(i, j) ? 1.0 / 3 : 0.0));
}

TEST_CASE("mhsa_forward: shape and mask errors") {
  Rng rng(24);
  const auto w = RandomWeights(rng, 8, 2);
  CHECK_THROWS_AS(mhsa_forward(RandomTensor(rng, {4, 6}), w, nullptr),
                  DimensionError);
  const auto m = band_mask(5, 1);
  CHECK_THROWS_AS(mhsa_forward(RandomTensor(rng, {4, 8}), w, &m),
                  DimensionError);
  CHECK_THROWS_AS(MhsaWeights<double>::Zeros(6, 4), ConfigError);
}

template <typename Real>
void CheckChunkEquivalence(double tol) {
  Rng rng(25);
  for (std::size_t c : {1, 2, 3, 4}) {
    const std::size_t t = 4 * c;
    const auto w = MhsaWeights<Real>::Random(rng, 8, 2);
    const auto x = UniformTensor<Real>(rng, Shape{t, 8}, -1, 1);
    const auto mask = chunk_mask(t, c);
    const auto whole = mhsa_forward(x, w, &mask).y;
    std::vector<Tensor<Real>> parts;
    for (std::size_t s = 0; s < t; s += c)
      parts.push_back(mhsa_forward(x.slice_rows(s, s + c), w, nullptr).y);
    const auto joined = ConcatRows<Real>(parts);
    CHECK(MaxRelativeDifference(whole, joined) <= tol);
  }
}

TEST_CASE("mhsa_forward: chunk mask equals per-chunk calls") {
  CheckChunkEquivalence<float>(1e-5);
  CheckChunkEquivalence<double>(1e-12);
}

TEST_CASE("mhsa_forward: permuting heads permutes maps and keeps y") {
  Rng rng(26);
  const std::size_t d = 12, heads = 3, dk = 4;
  const auto w = RandomWeights(rng, d, heads);
  const auto x = RandomTensor(rng, {5, d});
  const std::size_t perm[3] = {2, 0, 1};
  auto pw = w;
  for (std::size_t nh = 0; nh < heads; ++nh) {
    const std::size_t oh = perm[nh];
    for (std::size_t c = 0; c < dk; ++c) {
      for (std::size_t r = 0; r < d; ++r) {
        pw.w_q(r, nh * dk + c) = w.w_q(r, oh * dk + c);
        pw.w_k(r, nh * dk + c) = w.w_k(r, oh * dk + c);
        pw.w_v(r, nh * dk + c) = w.w_v(r, oh * dk + c);
        pw.w_pos(r, nh * dk + c) = w.w_pos(r, oh * dk + c);
        pw.w_o(nh * dk + c, r) = w.w_o(oh * dk + c, r);
      }
      pw.u_bias(nh, c) = w.u_bias(oh, c);
      pw.v_bias(nh, c) = w.v_bias(oh, c);
    }
  }
  const auto a = mhsa_forward(x, w, nullptr);
  const auto b = mhsa_forward(x, pw, nullptr);
  CHECK(MaxRelativeDifference(a.y, b.y) < 1e-12);
  for (std::size_t nh = 0; nh < heads; ++nh)
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j)
        CHECK(b.maps(nh, i, j) == a.maps(perm[nh], i, j));
}

double WeightedSum(const Tensor<double> &y, const Tensor<double> &r) {
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * r[i];
  return s;
}

TEST_CASE("mhsa_backward: zero upstream gives zero gradients") {
  Rng rng(27);
  const auto w = RandomWeights(rng, 4, 2);
  const auto x = RandomTensor(rng, {4, 4});
  const auto g = mhsa_backward(x, w, nullptr, Tensor<double>(Shape{4, 4}));
  for (const Tensor<double> *t : {&g.x, &g.w.w_q, &g.w.w_k, &g.w.w_v, &g.w.w_o,
                        &g.w.w_pos, &g.w.u_bias, &g.w.v_bias})
    for (double v : t->values()) CHECK(v == 0.0);
}

TEST_CASE("mhsa_backward: sum(y) gradient w.r.t. x matches finite differences") {
  Rng rng(28);
  const auto w = RandomWeights(rng, 4, 2);
  const auto x = RandomTensor(rng, {4, 4});
  const auto g = mhsa_backward(x, w, nullptr, Tensor<double>(Shape{4, 4}, 1.0));
  const auto num = finite_diff_grad(
      [&](const Tensor<double> &v) {
        const auto y = mhsa_forward(v, w, nullptr, false).y;
        return std::accumulate(y.storage().begin(), y.storage().end(), 0.0);
      },
      x);
  CHECK(NormRelativeError(g.x, num) < 1e-6);
}

TEST_CASE("mhsa_backward: every parameter matches finite differences") {
  Rng rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t t = 2 + rng.below(5);
    auto w = RandomWeights(rng, 8, 2);
    const auto x = RandomTensor(rng, {t, 8});
    const auto r = RandomTensor(rng, {t, 8});
    const auto mask = combine_masks(chunk_mask(t, 3), band_mask(t, 3));
    const auto g = mhsa_backward(x, w, &mask, r);
    auto loss = [&] { return WeightedSum(mhsa_forward(x, w, &mask, false).y, r); };
    CHECK(NormRelativeError(g.w.w_q, finite_diff_inplace(loss, w.w_q)) < 1e-6);
    CHECK(NormRelativeError(g.w.w_k, finite_diff_inplace(loss, w.w_k)) < 1e-6);
    CHECK(NormRelativeError(g.w.w_v, finite_diff_inplace(loss, w.w_v)) < 1e-6);
    CHECK(NormRelativeError(g.w.w_o, finite_diff_inplace(loss, w.w_o)) < 1e-6);
    CHECK(NormRelativeError(g.w.w_pos, finite_diff_inplace(loss, w.w_pos)) < 1e-6);
    CHECK(NormRelativeError(g.w.u_bias, finite_diff_inplace(loss, w.u_bias)) < 1e-6);
    CHECK(NormRelativeError(g.w.v_bias, finite_diff_inplace(loss, w.v_bias)) < 1e-6);
    auto xv = x;
    auto loss_x = [&] { return WeightedSum(mhsa_forward(xv, w, &mask, false).y, r); };
    CHECK(NormRelativeError(g.x, finite_diff_inplace(loss_x, xv)) < 1e-6);
  }
}

TEST_CASE("masked score gradients are exactly zero") {
  Rng rng(30);
  const auto mask = band_mask(5, 3);
  const auto probs = masked_softmax(RandomTensor(rng, {2, 5, 5}), mask.bits());
  const auto ds = masked_softmax_backward(probs, RandomTensor(rng, {2, 5, 5}));
  for (std::size_t h = 0; h < 2; ++h)
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j)
        if (!mask.allowed(i, j)) CHECK(ds(h, i, j) == 0.0);
}

TEST_CASE("attention stats: uniform, linearity and stochastic rows") {
  AttentionStats one(1, 4);
  one.accumulate(Tensor<double>(Shape{2, 4, 4}, 0.25), 0);
  const auto uniform = one.mean(0);
  for (double v : uniform.values()) CHECK(v == doctest::Approx(0.25));

  AttentionStats two(1, 3);
  Tensor<double> id(Shape{1, 3, 3});
  for (std::size_t i = 0; i < 3; ++i) id(0, i, i) = 1;
  two.accumulate(id, 0);
  two.accumulate(Tensor<double>(Shape{1, 3, 3}, 1.0 / 3), 0);
  const auto m = two.mean(0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(m(i, j) == doctest::Approx(((i == j) + 1.0 / 3) / 2));

  Rng rng(31);
  AttentionStats many(2, 6);
  AttentionStats half_a(2, 6), half_b(2, 6);
  for (int s = 0; s < 100; ++s) {
    const auto maps = masked_softmax(RandomTensor(rng, {3, 6, 6}, -4, 4),
                                     BinaryMask(Shape{6, 6}, 1));
    many.accumulate(maps, s % 2);
    (s < 50 ? half_a : half_b).accumulate(maps, s % 2);
  }
  half_a.merge(half_b);
  for (std::size_t l = 0; l < 2; ++l) {
    CHECK(many.sample_count(l) == 50);
    const auto mean = many.mean(l);
    for (std::size_t i = 0; i < 6; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < 6; ++j) s += mean(i, j);
      CHECK(std::abs(s - 1) < 1e-5);
    }
    CHECK(MaxRelativeDifference(half_a.mean(l), mean) < 1e-12);
  }

  CHECK_THROWS_AS(many.accumulate(Tensor<double>(Shape{1, 5, 5}), 0), StatsError);
  CHECK_THROWS_AS(many.accumulate(Tensor<double>(Shape{1, 6, 6}), 2), StatsError);
}

TEST_CASE("attention stats: block accumulation and CSV export") {
  // Two chunks of length 2 inside a masked 4x4 map.
  Tensor<float> maps(Shape{1, 4, 4});
  maps(0, 0, 0) = maps(0, 1, 1) = 1;
  maps(0, 2, 2) = maps(0, 2, 3) = maps(0, 3, 2) = maps(0, 3, 3) = 0.5f;
  AttentionStats stats(1, 2);
  stats.accumulate_blocks(maps, 0);
  CHECK(stats.sample_count(0) == 2);
  const auto m = stats.mean(0);
  CHECK(m(0, 0) == doctest::Approx(0.75));
  CHECK(m(0, 1) == doctest::Approx(0.25));

  const auto dir = std::filesystem::temp_directory_path() / "sfl_stats_test";
  std::filesystem::remove_all(dir);
  const auto files = stats.write_csv(dir);
  REQUIRE(files.size() == 1);
  std::ifstream in(files[0]);
  std::string line;
  std::getline(in, line);
  CHECK(line == "0.75,0.25");
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace sfl
