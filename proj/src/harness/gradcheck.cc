// src/harness/gradcheck.cc

#include "sfl/harness/gradcheck.h"

#include <map>

#include "sfl/attention/mhsa.h"
#include "sfl/deformconv/deform_conv.h"
#include "sfl/numerics/finite_diff.h"
#include "sfl/transducer/loss.h"

namespace sfl {
namespace {

double WeightedSum(const Tensor<double> &y, const Tensor<double> &r) {
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * r[i];
  return s;
}

LabelSequence RandomLabels(Rng &rng, std::size_t n, std::size_t vocab) {
  LabelSequence y(n);
  for (auto &l : y) l = rng.below(vocab);
  return y;
}

// Keeps the worst error per operation in first-seen order.
class Collector {
 public:
  explicit Collector(const GradcheckOptions &options) : options_(options) {}

  void Compare(const std::string &op, Tensor<double> analytic,
               const Tensor<double> &numeric) {
    if (options_.corrupt_analytic) options_.corrupt_analytic(op, analytic);
    const double err = NormRelativeError(analytic, numeric);
    auto [it, fresh] = index_.emplace(op, rows_.size());
    if (fresh) rows_.push_back({op, 0, 0.0, true});
    GradcheckRow &row = rows_[it->second];
    ++row.seeds;
    row.max_rel_error = std::max(row.max_rel_error, err);
    // A NaN error must fail, so test the passing condition directly.
    row.passed = row.passed && err < options_.tolerance;
  }

  std::vector<GradcheckRow> Take() { return std::move(rows_); }

 private:
  const GradcheckOptions &options_;
  std::map<std::string, std::size_t> index_;
  std::vector<GradcheckRow> rows_;
};

void CheckAttention(Collector &out, Rng &rng) {
  const std::size_t t = 2 + rng.below(5), d = 8, heads = 2;
  auto w = MhsaWeights<double>::Random(rng, d, heads);
  for (auto *u : {&w.u_bias, &w.v_bias})
    for (auto &v : u->values()) v = rng.uniform(-0.5, 0.5);
  auto x = UniformTensor<double>(rng, Shape{t, d}, -1, 1);
  const auto r = UniformTensor<double>(rng, Shape{t, d}, -1, 1);
  const auto mask = combine_masks(chunk_mask(t, 3), band_mask(t, 3));
  const auto g = mhsa_backward(x, w, &mask, r);
  auto loss = [&] { return WeightedSum(mhsa_forward(x, w, &mask, false).y, r); };
  out.Compare("attention.x", g.x, finite_diff_inplace(loss, x));
  out.Compare("attention.w_q", g.w.w_q, finite_diff_inplace(loss, w.w_q));
  out.Compare("attention.w_k", g.w.w_k, finite_diff_inplace(loss, w.w_k));
  out.Compare("attention.w_v", g.w.w_v, finite_diff_inplace(loss, w.w_v));
  out.Compare("attention.w_o", g.w.w_o, finite_diff_inplace(loss, w.w_o));
  out.Compare("attention.w_pos", g.w.w_pos, finite_diff_inplace(loss, w.w_pos));
  out.Compare("attention.u_bias", g.w.u_bias, finite_diff_inplace(loss, w.u_bias));
  out.Compare("attention.v_bias", g.w.v_bias, finite_diff_inplace(loss, w.v_bias));
}

void CheckDeform(Collector &out, Rng &rng) {
  const std::size_t c = 4, k = 5, groups = 2, t = 8;
  auto w = DeformWeights<double>::Zeros(c, c, k, groups, groups);
  w.output_kernel = UniformTensor<double>(rng, w.output_kernel.shape(), -1, 1);
  w.output_bias = UniformTensor<double>(rng, w.output_bias.shape(), -1, 1);
  w.offset_kernel = UniformTensor<double>(rng, w.offset_kernel.shape(), -0.05, 0.05);
  // Half-integer offsets keep every sample at least 0.3 away from an
  // integer position, where linear interpolation has a kink.
  for (auto &b : w.offset_bias.values())
    b = static_cast<double>(static_cast<long>(rng.below(5)) - 2) + 0.5;
  auto x = UniformTensor<double>(rng, Shape{t, c}, -1, 1);
  const auto r = UniformTensor<double>(rng, Shape{t, c}, -1, 1);
  const auto g = deform_conv1d_backward(x, w, r);
  auto loss = [&] {
    return WeightedSum(deform_conv1d_forward(x, w, predict_offsets(x, w)), r);
  };
  out.Compare("deform.x", g.x, finite_diff_inplace(loss, x));
  out.Compare("deform.output_kernel", g.w.output_kernel,
              finite_diff_inplace(loss, w.output_kernel));
  out.Compare("deform.output_bias", g.w.output_bias,
              finite_diff_inplace(loss, w.output_bias));
  out.Compare("deform.offset_kernel", g.w.offset_kernel,
              finite_diff_inplace(loss, w.offset_kernel));
  out.Compare("deform.offset_bias", g.w.offset_bias,
              finite_diff_inplace(loss, w.offset_bias));
}

void CheckRnnt(Collector &out, Rng &rng) {
  const std::size_t t = 1 + rng.below(4), u = rng.below(4), v = 1 + rng.below(4);
  const auto y = RandomLabels(rng, u, v);
  auto logits = UniformTensor<double>(rng, Shape{t, u + 1, v + 1}, -2, 2);
  const auto r = rnnt_loss_from_logits(logits, y);
  out.Compare("rnnt.logits", r.grad_logits,
              finite_diff_inplace([&] { return rnnt_loss_from_logits(logits, y).loss; },
                                  logits));
}

void CheckCtc(Collector &out, Rng &rng) {
  const std::size_t u = rng.below(4), v = 1 + rng.below(4);
  const auto y = RandomLabels(rng, u, v);
  const std::size_t t = std::max<std::size_t>(CtcMinimumFrames(y), 1) + rng.below(3);
  auto logits = UniformTensor<double>(rng, Shape{t, v + 1}, -2, 2);
  const auto r = ctc_loss(logits, y, v);
  out.Compare("ctc.logits", r.grad_logits,
              finite_diff_inplace([&] { return ctc_loss(logits, y, v).loss; }, logits));
}

}  // namespace

GradScope ParseGradScope(std::string_view name) {
  if (name == "attention") return GradScope::kAttention;
  if (name == "deform") return GradScope::kDeform;
  if (name == "rnnt") return GradScope::kRnnt;
  if (name == "ctc") return GradScope::kCtc;
  if (name == "all") return GradScope::kAll;
  throw ConfigError("unknown gradcheck scope '" + std::string(name) +
                    "' (expected attention, deform, rnnt, ctc or all)");
}

bool GradcheckReport::passed() const {
  if (rows.empty()) return false;
  for (const auto &r : rows)
    if (!r.passed) return false;
  return true;
}

GradcheckReport gradcheck(GradScope scope, const GradcheckOptions &options) {
  using Check = void (*)(Collector &, Rng &);
  std::vector<std::pair<GradScope, Check>> checks = {
      {GradScope::kAttention, CheckAttention},
      {GradScope::kDeform, CheckDeform},
      {GradScope::kRnnt, CheckRnnt},
      {GradScope::kCtc, CheckCtc}};
  Collector collector(options);
  for (std::size_t i = 0; i < checks.size(); ++i) {
    if (scope != GradScope::kAll && scope != checks[i].first) continue;
    for (std::size_t s = 0; s < options.seeds; ++s) {
      // Each (operation, seed) pair has its own stream.
      Rng rng(options.seed * 1'000'003 + i * 100'000 + s);
      checks[i].second(collector, rng);
    }
  }
  return {collector.Take()};
}

CsvTable GradcheckTable(const GradcheckReport &report) {
  CsvTable t;
  t.header = {"operation", "seeds", "max_rel_error", "passed"};
  for (const auto &r : report.rows) {
    t.rows.push_back({r.operation, std::to_string(r.seeds),
                      FormatReal(r.max_rel_error), r.passed ? "1" : "0"});
  }
  return t;
}

}  // namespace sfl
