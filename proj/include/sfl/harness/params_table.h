// include/sfl/harness/params_table.h

#pragma once

#include <string>

#include "sfl/encoder/params.h"
#include "sfl/harness/csv.h"

namespace sfl {

struct VariantCount {
  Variant variant;
  std::size_t total = 0;
  ParameterBreakdown breakdown;
};

// Counts for baseline, soft and hard built from `config` (its variant field
// is ignored).
std::vector<VariantCount> variant_counts(const EncoderConfig &config,
                                         bool include_transducer,
                                         const TransducerDims &dims);

// One row per ordered pair (a, b): a - b and (a - b) / b in percent.
CsvTable ParamsDeltaTable(const std::vector<VariantCount> &counts);
CsvTable ParamsTotalsTable(const std::vector<VariantCount> &counts);

// "15.8M"-style rendering with one decimal.
std::string HumanCount(long long n);

}  // namespace sfl
