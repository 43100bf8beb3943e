// src/harness/params_table.cc

#include "sfl/harness/params_table.h"

#include <cstdio>
#include <cstdlib>

namespace sfl {

std::vector<VariantCount> variant_counts(const EncoderConfig &config,
                                         bool include_transducer,
                                         const TransducerDims &dims) {
  std::vector<VariantCount> out;
  for (Variant v : {Variant::kBaseline, Variant::kSoft, Variant::kHard}) {
    EncoderConfig c = config;
    c.variant = v;
    const auto b = parameter_breakdown(c, include_transducer, dims);
    out.push_back({v, b.total(), b});
  }
  return out;
}

CsvTable ParamsTotalsTable(const std::vector<VariantCount> &counts) {
  CsvTable t;
  t.header = {"variant",     "total",       "subsampling", "feed_forward",
              "middle",      "convolution", "final_norms", "transducer"};
  for (const auto &c : counts) {
    const auto &b = c.breakdown;
    t.rows.push_back({std::string(VariantName(c.variant)), std::to_string(c.total),
                      std::to_string(b.subsampling), std::to_string(b.feed_forward),
                      std::to_string(b.middle), std::to_string(b.convolution),
                      std::to_string(b.final_norms), std::to_string(b.transducer)});
  }
  return t;
}

CsvTable ParamsDeltaTable(const std::vector<VariantCount> &counts) {
  CsvTable t;
  t.header = {"a", "b", "delta", "delta_pct_of_b"};
  for (const auto &a : counts)
    for (const auto &b : counts) {
      const long long delta =
          static_cast<long long>(a.total) - static_cast<long long>(b.total);
      t.rows.push_back({std::string(VariantName(a.variant)),
                        std::string(VariantName(b.variant)), std::to_string(delta),
                        FormatReal(100.0 * static_cast<double>(delta) /
                                   static_cast<double>(b.total))});
    }
  return t;
}

std::string HumanCount(long long n) {
  char buf[32];
  const double v = static_cast<double>(n);
  if (std::llabs(n) >= 1'000'000) {
    std::snprintf(buf, sizeof(buf), "%.1fM", v / 1e6);
  } else if (std::llabs(n) >= 1'000) {
    std::snprintf(buf, sizeof(buf), "%.1fK", v / 1e3);
  } else {
    std::snprintf(buf, sizeof(buf), "%lld", n);
  }
  return buf;
}

}  // namespace sfl
