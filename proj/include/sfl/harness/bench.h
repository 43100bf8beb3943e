// include/sfl/harness/bench.h
//
// Encoder-only real-time-factor benchmark on synthetic features.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sfl/encoder/encoder.h"
#include "sfl/harness/csv.h"

namespace sfl {

enum class EncodeMode { kMaskedBatch, kIncremental };

std::string_view ModeName(EncodeMode m);
EncodeMode ParseMode(std::string_view name);

struct BenchPlan {
  std::uint64_t seed = 0;
  std::vector<double> durations_s = {15, 30, 60, 120};
  std::size_t feature_dim = 80;
  std::size_t frame_hop_ms = 10;
  std::size_t repeat_factor = 1;  // 1 or 3
  std::size_t warmup_runs = 1;
  std::size_t timed_runs = 3;

  void Validate() const;
};

struct FeatureSequence {
  std::string id;
  double duration_s = 0;   // after repetition
  Tensor<float> features;  // [frames, feature_dim]
};

// Seeded standard-normal frames; utterance i draws from its own stream so
// adding durations never changes earlier utterances.
std::vector<FeatureSequence> gen_utterances(const BenchPlan &plan);

struct RtfRecord {
  std::string utterance_id;
  double audio_duration_s = 0;
  double encoder_wall_time_s = 0;  // median of the timed runs
  double rtf = 0;                  // encoder_wall_time_s / audio_duration_s
  Variant variant = Variant::kBaseline;
  EncodeMode mode = EncodeMode::kMaskedBatch;
  std::size_t chunk_ms = 0;
  std::size_t repeat_factor = 1;
};

// Runs serially on the calling thread: per utterance, warmup_runs untimed
// encodes then timed_runs timed encodes on a monotonic clock.
std::vector<RtfRecord> bench_rtf(const BenchPlan &plan,
                                 const EncoderModel<float> &model,
                                 const ChunkSpec &chunk, EncodeMode mode);

template <typename Real>
EncodeResult<Real> RunEncoder(const Tensor<Real> &features,
                              const EncoderModel<Real> &model,
                              const ChunkSpec &chunk, EncodeMode mode,
                              const EncodeOptions &options = {});

// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

CsvTable RtfTable(std::span<const RtfRecord> records);

}  // namespace sfl
