// tests/acceptance_test.cc
//
// One PASS/FAIL line per acceptance criterion, each with its measured
// values and its runtime against the allowed budget. Criterion 9 is
// informational. Exit status is nonzero if any of 1-8 fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "loss_oracles.h"
#include "sfl/attention/mask.h"
#include "sfl/deformconv/deform_conv.h"
#include "sfl/encoder/encoder.h"
#include "sfl/encoder/params.h"
#include "sfl/harness/bench.h"
#include "sfl/harness/gradcheck.h"
#include "sfl/transducer/loss.h"
#include "test_util.h"

namespace sfl {
namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string Fmt(const char *format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

constexpr Variant kVariants[] = {Variant::kBaseline, Variant::kSoft,
                                 Variant::kHard};
constexpr std::size_t kChunkMs[] = {160, 320, 640, 1280};

// Same construction as the encoder unit tests: every tensor moved off its
// initial value, offsets fractional and nonzero.
template <typename Real>
EncoderModel<Real> ToyModel(Variant v, std::uint64_t seed) {
  auto model = EncoderModel<Real>::Init(EncoderConfig::Toy(v), seed);
  Rng rng(seed + 1000);
  model.ForEachTensor([&](const std::string &name, Tensor<Real> &t) {
    double spread = 0.1;
    if (name.find("offset_bias") != std::string::npos) spread = 2.0;
    if (name.find("offset_kernel") != std::string::npos) spread = 0.3;
    for (auto &x : t.values()) x += static_cast<Real>(rng.uniform(-spread, spread));
  });
  return model;
}

Outcome MaskDensity() {
  const std::size_t seven = band_mask(32, 7).count_ones();
  const std::size_t five = band_mask(32, 5).count_ones();
  const double p7 = 100.0 * seven / 1024, p5 = 100.0 * five / 1024;
  return {seven == 212 && five == 154 && std::lround(p7) == 21 &&
              std::lround(p5) == 15,
          Fmt("band(32,7) keeps %zu/1024 = %.1f%%, band(32,5) keeps %zu/1024 = "
              "%.1f%%",
              seven, p7, five, p5)};
}

Outcome ParameterDeltas() {
  const auto base = count_parameters(EncoderConfig::FullSize(Variant::kBaseline), false);
  const auto soft = count_parameters(EncoderConfig::FullSize(Variant::kSoft), false);
  const auto hard = count_parameters(EncoderConfig::FullSize(Variant::kHard), false);
  const double bh = double(base - hard), sh = double(soft - hard);
  return {bh >= 15.5e6 && bh <= 16.1e6 && sh >= 1.6e6 && sh <= 2.6e6,
          Fmt("baseline-hard = %.0f in [15.5M, 16.1M], soft-hard = %.0f in "
              "[1.6M, 2.6M]",
              bh, sh)};
}

Outcome CrossMode() {
  double worst = 0;
  std::size_t runs = 0;
  for (Variant v : kVariants)
    for (std::size_t ms : kChunkMs)
      for (std::uint64_t seed = 0; seed < 20; ++seed, ++runs) {
        const auto model = ToyModel<float>(v, seed);
        const auto chunk = ChunkSpec::FromMs(ms, model.config);
        Rng rng(seed + 77);
        const auto x = NormalTensor<float>(rng, Shape{3 * chunk.raw_frames, 8});
        worst = std::max(
            worst, MaxRelativeDifference(encode_incremental(x, model, chunk).outputs,
                                         encode_masked_batch(x, model, chunk).outputs));
      }
  return {worst < 1e-5, Fmt("%zu runs (3 variants x 4 chunks x 20 seeds), worst "
                            "relative difference %.3g < 1e-5",
                            runs, worst)};
}

Outcome ChunkIsolation() {
  std::size_t probes = 0, leaks = 0, silent = 0;
  for (Variant v : kVariants)
    for (std::size_t ms : kChunkMs)
      for (std::uint64_t seed = 0; seed < 2; ++seed) {
        const auto model = ToyModel<float>(v, seed);
        const auto chunk = ChunkSpec::FromMs(ms, model.config);
        const std::size_t n_chunks = 3, c = chunk.frames_per_chunk;
        Rng rng(seed + 5);
        const auto x = NormalTensor<float>(rng, Shape{n_chunks * chunk.raw_frames, 8});
        for (bool batch : {false, true}) {
          auto run = [&](const Tensor<float> &in) {
            return batch ? encode_masked_batch(in, model, chunk).outputs
                         : encode_incremental(in, model, chunk).outputs;
          };
          const auto base = run(x);
          for (std::size_t target = 0; target < n_chunks; ++target, ++probes) {
            auto moved_in = x;
            const std::size_t frame = target * chunk.raw_frames + rng.below(chunk.raw_frames);
            for (std::size_t f = 0; f < 8; ++f) moved_in(frame, f) += 3.0f;
            const auto moved = run(moved_in);
            bool changed_inside = false;
            for (std::size_t i = 0; i < base.dim(0); ++i)
              for (std::size_t d = 0; d < base.dim(1); ++d) {
                const bool differs = base(i, d) != moved(i, d);
                if (i / c == target) changed_inside |= differs;
                else if (differs) ++leaks;
              }
            if (!changed_inside) ++silent;
          }
        }
      }
  return {leaks == 0 && silent == 0,
          Fmt("%zu perturbations over 3 variants, 4 chunks, both modes: %zu "
              "outputs changed outside the perturbed chunk",
              probes, leaks)};
}

Outcome DeformReduction() {
  Rng rng(42);
  double worst = 0;
  std::size_t shapes = 0;
  for (std::size_t t = 1; t <= 32; ++t)
    for (std::size_t c = 1; c <= 8; ++c)
      for (std::size_t k : {1, 3, 5, 7})
        for (std::size_t groups : {1, 2, 4, 8}) {
          if (c % groups) continue;
          auto w = DeformWeights<double>::Zeros(c, c, k, groups, groups);
          w.output_kernel = testing::RandomTensor(rng, w.output_kernel.shape());
          w.output_bias = testing::RandomTensor(rng, w.output_bias.shape());
          const auto x = testing::RandomTensor(rng, {t, c});
          const auto y =
              deform_conv1d_forward(x, w, Tensor<double>(Shape{t, groups, k}));
          worst = std::max(worst, MaxRelativeDifference(
                                      y, testing::GroupedConv(x, w.output_kernel,
                                                              w.output_bias, groups)));
          ++shapes;
        }
  // Offsets [-1, 3, 0] at the third timestep with K = 3.
  Tensor<double> x(Shape{8, 1});
  for (std::size_t t = 0; t < 8; ++t) x(t, 0) = 10.0 + t;
  std::vector<double> sampled;
  for (std::size_t tap = 0; tap < 3; ++tap) {
    auto w = DeformWeights<double>::Zeros(1, 1, 3, 1, 1);
    w.output_kernel(0, 0, tap) = 1;
    w.offset_bias = Tensor<double>::Vector({-1, 3, 0});
    sampled.push_back(deform_conv1d_forward(x, w, predict_offsets(x, w))(2, 0) - 10.0);
  }
  const bool taps = sampled == std::vector<double>{0, 5, 3};
  return {worst <= 1e-12 && taps,
          Fmt("%zu zero-offset shapes, worst difference %.3g <= 1e-12; sampled "
              "positions {%g,%g,%g}",
              shapes, worst, sampled[0], sampled[1], sampled[2])};
}

Outcome GradientSuite() {
  GradcheckOptions options;
  options.seeds = 100;
  const auto report = gradcheck(GradScope::kAll, options);
  double worst = 0;
  std::string worst_op;
  for (const auto &r : report.rows) {
    if (r.max_rel_error >= worst) {
      worst = r.max_rel_error;
      worst_op = r.operation;
    }
  }
  return {report.passed() && report.rows.size() == 15,
          Fmt("%zu gradients x 100 seeds (attention, deform, rnnt, ctc), worst "
              "%.3g (%s) < 1e-5",
              report.rows.size(), worst, worst_op.c_str())};
}

Outcome LossOracles() {
  Rng rng(2);
  double worst_rnnt = 0, worst_ctc = 0;
  std::size_t cases = 0, infeasible_ok = 0, infeasible = 0;
  for (std::size_t t = 1; t <= 4; ++t)
    for (std::size_t u = 0; u <= 3; ++u)
      for (std::size_t v = 1; v <= 4; ++v)
        for (int rep = 0; rep < 4; ++rep, ++cases) {
          LabelSequence y(u);
          for (auto &l : y) l = rng.below(v);
          const auto rl = testing::RandomTensor(rng, {t, u + 1, v + 1}, -3, 3);
          worst_rnnt = std::max(worst_rnnt,
                                std::abs(rnnt_loss_from_logits(rl, y).loss -
                                         testing::RnntEnumerate(rl, y)));
          const auto cl = testing::RandomTensor(rng, {t, v + 1}, -3, 3);
          if (t < CtcMinimumFrames(y)) {
            ++infeasible;
            try {
              ctc_loss(cl, y, v);
            } catch (const InfeasibleAlignmentError &) {
              ++infeasible_ok;
            }
            continue;
          }
          worst_ctc = std::max(worst_ctc, std::abs(ctc_loss(cl, y, v).loss -
                                                   testing::CtcEnumerate(cl, y, v)));
        }
  return {worst_rnnt < 1e-9 && worst_ctc < 1e-9 && infeasible_ok == infeasible,
          Fmt("%zu draws over T'<=4, U<=3, V<=4: rnnt %.3g, ctc %.3g (< 1e-9); "
              "%zu infeasible ctc cases rejected",
              cases, worst_rnnt, worst_ctc, infeasible)};
}

// Benchmark width: d=144, 6 layers, 4 heads, FFN 576, full-size kernels and
// 80-dim features, 1280 ms chunks.
EncoderConfig BenchConfig(Variant v) {
  EncoderConfig c = EncoderConfig::FullSize(v);
  c.d_model = 144;
  c.layers = 6;
  c.heads = 4;
  c.ffn_dim = 576;
  return c;
}

Outcome RtfScaling() {
  const std::vector<double> lengths = {15, 30, 60, 120};
  std::vector<EncoderModel<float>> models;
  for (Variant v : kVariants) models.push_back(EncoderModel<float>::Init(BenchConfig(v), 0));
  const auto chunk = ChunkSpec::FromMs(1280, models[0].config);

  BenchPlan plan;
  plan.durations_s = lengths;
  double slope[2][3];
  for (int m = 0; m < 2; ++m) {
    const EncodeMode mode = m == 0 ? EncodeMode::kMaskedBatch : EncodeMode::kIncremental;
    for (std::size_t v = 0; v < 3; ++v) {
      std::vector<double> wall;
      for (const auto &r : bench_rtf(plan, models[v], chunk, mode))
        wall.push_back(r.encoder_wall_time_s);
      slope[m][v] = loglog_slope(lengths, wall);
    }
  }

  // The 60 s ordering interleaves single runs of each variant so drift in
  // machine speed hits all alike, and keeps the fastest run per variant:
  // interference only adds time.
  plan.durations_s = {60};
  const auto input = pad_to_chunk(gen_utterances(plan).front().features, chunk);
  double best60[3] = {1e300, 1e300, 1e300};
  for (std::size_t v = 0; v < 3; ++v)
    RunEncoder(input, models[v], chunk, EncodeMode::kMaskedBatch);  // warmup
  for (int round = 0; round < 15; ++round)
    for (std::size_t v = 0; v < 3; ++v) {
      const auto start = std::chrono::steady_clock::now();
      RunEncoder(input, models[v], chunk, EncodeMode::kMaskedBatch);
      best60[v] = std::min(best60[v], std::chrono::duration<double>(
                                          std::chrono::steady_clock::now() - start)
                                          .count());
    }
  const double base60 = best60[0], soft60 = best60[1], hard60 = best60[2];

  const bool slopes = slope[0][0] > slope[0][2];
  const bool ordering = hard60 < soft60 && soft60 < base60;
  const bool linear = slope[1][0] <= 1.2 && slope[1][1] <= 1.2 && slope[1][2] <= 1.2;
  return {slopes && ordering && linear,
          Fmt("masked-batch slopes baseline %.3f > hard %.3f (soft %.3f); 60 s "
              "best wall hard %.3fs < soft %.3fs < baseline %.3fs; incremental "
              "slopes %.3f/%.3f/%.3f <= 1.2",
              slope[0][0], slope[0][2], slope[0][1], hard60, soft60, base60,
              slope[1][0], slope[1][1], slope[1][2])};
}

struct Criterion {
  int id;
  const char *name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace sfl

int main() {
  using namespace sfl;
  const std::vector<Criterion> criteria = {
      {1, "mask density", 1, MaskDensity},
      {2, "parameter deltas", 1, ParameterDeltas},
      {3, "cross-mode equivalence", 60, CrossMode},
      {4, "chunk isolation", 60, ChunkIsolation},
      {5, "deformable reduction", 10, DeformReduction},
      {6, "gradient suite", 300, GradientSuite},
      {7, "loss oracles", 60, LossOracles},
      {8, "RTF scaling shape", 600, RtfScaling},
  };
  int failures = 0;
  for (const auto &c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception &e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = secs < c.budget_s;
    const bool pass = o.passed && in_budget;
    failures += !pass;
    std::printf("%s criterion %d (%s): %s [%.2f s, budget %.0f s]\n",
                pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                c.budget_s);
    std::fflush(stdout);
  }
  std::printf(
      "INFO criterion 9 (WER tables): not reproducible without full-scale "
      "training; criteria 3-7 stand in, and mask-sweep reports output "
      "divergence as the untrained analogue of the masking degradation\n");
  std::printf("%s: %d of %zu criteria failed\n", failures ? "FAILED" : "PASSED",
              failures, criteria.size());
  return failures ? 1 : 0;
}
