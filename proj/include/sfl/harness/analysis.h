// include/sfl/harness/analysis.h
//
// Attention-band masking sweep and mean attention-map export for the
// baseline encoder.

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "sfl/harness/bench.h"

namespace sfl {

struct MaskSweepRow {
  std::string utterance_id;
  std::optional<std::size_t> n_diag;  // nullopt: every diagonal kept
  double retained_fraction = 0;       // kept entries per chunk map
  double divergence = 0;              // ||y_masked - y_full|| / ||y_full||
};

// One row per (n_diag in n_diags plus "all", utterance). Throws
// UnsupportedVariantError unless the model is the baseline.
std::vector<MaskSweepRow> mask_sweep(const EncoderModel<float> &model,
                                     const ChunkSpec &chunk,
                                     std::span<const FeatureSequence> utterances,
                                     std::span<const std::size_t> n_diags);

CsvTable MaskSweepTable(std::span<const MaskSweepRow> rows);

// Mean per-layer attention map over every chunk of every utterance.
AttentionStats dump_attention(const EncoderModel<float> &model,
                              const ChunkSpec &chunk,
                              std::span<const FeatureSequence> utterances,
                              EncodeMode mode = EncodeMode::kIncremental);

}  // namespace sfl
