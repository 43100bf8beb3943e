// src/harness/analysis.cc

#include "sfl/harness/analysis.h"

#include <cmath>

namespace sfl {
namespace {

void RequireBaseline(const EncoderModel<float> &model, const char *what) {
  if (model.config.variant != Variant::kBaseline) {
    throw UnsupportedVariantError(
        std::string(what) + " needs the baseline variant; " +
        std::string(VariantName(model.config.variant)) + " has no attention");
  }
}

// ||a - b|| / ||b||, 0 when both vanish.
double Divergence(const Tensor<float> &a, const Tensor<float> &b) {
  double diff = 0, norm = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (double(a[i]) - double(b[i])) * (double(a[i]) - double(b[i]));
    norm += double(b[i]) * double(b[i]);
  }
  if (diff == 0) return 0;
  return std::sqrt(diff / norm);
}

}  // namespace

std::vector<MaskSweepRow> mask_sweep(const EncoderModel<float> &model,
                                     const ChunkSpec &chunk,
                                     std::span<const FeatureSequence> utterances,
                                     std::span<const std::size_t> n_diags) {
  RequireBaseline(model, "mask sweep");
  const std::size_t c = chunk.frames_per_chunk;
  for (std::size_t n : n_diags) {
    if (n == 0 || n % 2 == 0) {
      throw ConfigError("n_diag must be odd and positive, got " +
                        std::to_string(n));
    }
  }
  std::vector<std::optional<std::size_t>> settings(n_diags.begin(), n_diags.end());
  settings.push_back(std::nullopt);

  std::vector<Tensor<float>> inputs, fulls;
  for (const auto &utt : utterances) {
    inputs.push_back(pad_to_chunk(utt.features, chunk));
    fulls.push_back(encode_masked_batch(inputs.back(), model, chunk).outputs);
  }

  std::vector<MaskSweepRow> rows;
  for (const auto &setting : settings) {
    const std::size_t kept =
        setting ? BandOnesClosedForm(c, std::min(*setting, 2 * c - 1)) : c * c;
    for (std::size_t u = 0; u < utterances.size(); ++u) {
      const Tensor<float> &full = fulls[u];
      const Tensor<float> masked =
          setting ? encode_masked_batch(inputs[u], model, chunk, *setting).outputs
                  : full;
      MaskSweepRow row;
      row.utterance_id = utterances[u].id;
      row.n_diag = setting;
      row.retained_fraction =
          static_cast<double>(kept) / static_cast<double>(c * c);
      row.divergence = Divergence(masked, full);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

CsvTable MaskSweepTable(std::span<const MaskSweepRow> rows) {
  CsvTable t;
  t.header = {"utterance_id", "n_diag", "retained_fraction", "divergence"};
  for (const auto &r : rows) {
    t.rows.push_back({r.utterance_id,
                      r.n_diag ? std::to_string(*r.n_diag) : "all",
                      FormatReal(r.retained_fraction), FormatReal(r.divergence)});
  }
  return t;
}

AttentionStats dump_attention(const EncoderModel<float> &model,
                              const ChunkSpec &chunk,
                              std::span<const FeatureSequence> utterances,
                              EncodeMode mode) {
  RequireBaseline(model, "attention dump");
  AttentionStats stats(model.blocks.size(), chunk.frames_per_chunk);
  EncodeOptions options;
  options.collect_stats = true;
  for (const auto &utt : utterances) {
    const auto result =
        RunEncoder(pad_to_chunk(utt.features, chunk), model, chunk, mode, options);
    stats.merge(*result.stats);
  }
  return stats;
}

}  // namespace sfl
