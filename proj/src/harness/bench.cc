// src/harness/bench.cc

#include "sfl/harness/bench.h"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace sfl {

std::string_view ModeName(EncodeMode m) {
  return m == EncodeMode::kMaskedBatch ? "masked-batch" : "incremental";
}

EncodeMode ParseMode(std::string_view name) {
  if (name == "masked-batch") return EncodeMode::kMaskedBatch;
  if (name == "incremental") return EncodeMode::kIncremental;
  throw ConfigError("unknown mode '" + std::string(name) +
                    "' (expected masked-batch or incremental)");
}

void BenchPlan::Validate() const {
  if (durations_s.empty()) throw ConfigError("bench plan has no durations");
  for (double d : durations_s) {
    if (!(d > 0)) throw ConfigError("utterance durations must be positive");
  }
  if (repeat_factor != 1 && repeat_factor != 3) {
    throw ConfigError("repeat factor must be 1 or 3, got " +
                      std::to_string(repeat_factor));
  }
  if (warmup_runs < 1) throw ConfigError("need at least 1 warmup run");
  if (timed_runs < 3) throw ConfigError("need at least 3 timed runs");
  if (feature_dim == 0 || frame_hop_ms == 0) {
    throw ConfigError("feature_dim and frame_hop_ms must be positive");
  }
}

std::vector<FeatureSequence> gen_utterances(const BenchPlan &plan) {
  plan.Validate();
  std::vector<FeatureSequence> out;
  for (std::size_t i = 0; i < plan.durations_s.size(); ++i) {
    const double d = plan.durations_s[i];
    const auto frames = static_cast<std::size_t>(
        std::llround(d * 1000.0 / static_cast<double>(plan.frame_hop_ms)));
    if (frames == 0) throw ConfigError("utterance shorter than one frame");
    Rng rng(plan.seed ^ (0x9e3779b97f4a7c15ULL * (i + 1)));
    const Tensor<float> base =
        NormalTensor<float>(rng, Shape{frames, plan.feature_dim});
    std::vector<Tensor<float>> copies(plan.repeat_factor, base);
    FeatureSequence seq;
    seq.id = "utt" + std::to_string(i);
    seq.duration_s = d * static_cast<double>(plan.repeat_factor);
    seq.features = plan.repeat_factor == 1 ? base : ConcatRows<float>(copies);
    out.push_back(std::move(seq));
  }
  return out;
}

template <typename Real>
EncodeResult<Real> RunEncoder(const Tensor<Real> &features,
                              const EncoderModel<Real> &model,
                              const ChunkSpec &chunk, EncodeMode mode,
                              const EncodeOptions &options) {
  return mode == EncodeMode::kMaskedBatch
             ? encode_masked_batch(features, model, chunk, std::nullopt, options)
             : encode_incremental(features, model, chunk, options);
}

template EncodeResult<float> RunEncoder(const Tensor<float> &,
                                        const EncoderModel<float> &,
                                        const ChunkSpec &, EncodeMode,
                                        const EncodeOptions &);
template EncodeResult<double> RunEncoder(const Tensor<double> &,
                                         const EncoderModel<double> &,
                                         const ChunkSpec &, EncodeMode,
                                         const EncodeOptions &);

std::vector<RtfRecord> bench_rtf(const BenchPlan &plan,
                                 const EncoderModel<float> &model,
                                 const ChunkSpec &chunk, EncodeMode mode) {
  using Clock = std::chrono::steady_clock;
  static_assert(Clock::is_steady);
  if (plan.feature_dim != model.config.feature_dim) {
    throw ConfigError("bench plan feature_dim " + std::to_string(plan.feature_dim) +
                      " vs model " + std::to_string(model.config.feature_dim));
  }
  std::vector<RtfRecord> records;
  for (const auto &utt : gen_utterances(plan)) {
    const Tensor<float> input = pad_to_chunk(utt.features, chunk);
    for (std::size_t i = 0; i < plan.warmup_runs; ++i)
      RunEncoder(input, model, chunk, mode);
    std::vector<double> times;
    for (std::size_t i = 0; i < plan.timed_runs; ++i) {
      const auto start = Clock::now();
      const auto result = RunEncoder(input, model, chunk, mode);
      const auto stop = Clock::now();
      if (result.outputs.empty()) throw Error("encoder produced no output");
      times.push_back(std::chrono::duration<double>(stop - start).count());
    }
    std::sort(times.begin(), times.end());
    const std::size_t n = times.size();
    const double median =
        n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
    if (!(median > 0)) {
      throw Error("monotonic clock reported a non-positive duration for " +
                  utt.id);
    }
    RtfRecord r;
    r.utterance_id = utt.id;
    r.audio_duration_s = utt.duration_s;
    r.encoder_wall_time_s = median;
    r.rtf = median / utt.duration_s;
    r.variant = model.config.variant;
    r.mode = mode;
    r.chunk_ms = chunk.chunk_ms;
    r.repeat_factor = plan.repeat_factor;
    records.push_back(std::move(r));
  }
  return records;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw DimensionError("loglog_slope needs two equal-length series of >= 2");
  }
  double mx = 0, my = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) {
      throw DimensionError("loglog_slope needs positive values");
    }
    mx += std::log(x[i]) / n;
    my += std::log(y[i]) / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0) throw DimensionError("loglog_slope: all x values equal");
  return sxy / sxx;
}

CsvTable RtfTable(std::span<const RtfRecord> records) {
  CsvTable t;
  t.header = {"utterance_id", "audio_duration_s", "encoder_wall_time_s", "rtf",
              "variant",      "mode",             "chunk_ms",            "repeat_factor"};
  for (const auto &r : records) {
    t.rows.push_back({r.utterance_id, FormatReal(r.audio_duration_s),
                      FormatReal(r.encoder_wall_time_s), FormatReal(r.rtf),
                      std::string(VariantName(r.variant)),
                      std::string(ModeName(r.mode)), std::to_string(r.chunk_ms),
                      std::to_string(r.repeat_factor)});
  }
  return t;
}

}  // namespace sfl
