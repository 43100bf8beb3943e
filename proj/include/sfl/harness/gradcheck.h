// include/sfl/harness/gradcheck.h
//
// Finite-difference check of every hand-derived backward pass, in double.

#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "sfl/harness/csv.h"
#include "sfl/numerics/tensor.h"

namespace sfl {

enum class GradScope { kAttention, kDeform, kRnnt, kCtc, kAll };

GradScope ParseGradScope(std::string_view name);

inline constexpr double kGradTolerance = 1e-5;

struct GradcheckOptions {
  std::uint64_t seed = 0;
  std::size_t seeds = 100;  // random problems per operation
  double tolerance = kGradTolerance;
  // Applied to every analytic gradient before comparison (negative control).
  std::function<void(const std::string &operation, Tensor<double> &grad)>
      corrupt_analytic;
};

struct GradcheckRow {
  std::string operation;  // e.g. "attention.w_q"
  std::size_t seeds = 0;
  double max_rel_error = 0;  // norm-wise, worst over seeds
  bool passed = false;
};

struct GradcheckReport {
  std::vector<GradcheckRow> rows;
  bool passed() const;
};

GradcheckReport gradcheck(GradScope scope, const GradcheckOptions &options);

CsvTable GradcheckTable(const GradcheckReport &report);

}  // namespace sfl
