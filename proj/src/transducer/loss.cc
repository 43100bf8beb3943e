// src/transducer/loss.cc

#include "sfl/transducer/loss.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sfl {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double LogAdd(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

void CheckLabels(std::span<const Label> targets, std::size_t vocab) {
  for (Label l : targets) {
    if (l >= vocab) {
      throw DimensionError("target label " + std::to_string(l) +
                           " outside [0, " + std::to_string(vocab) + ")");
    }
  }
}

// dL/dz from dL/d(log_softmax(z)) for one row: g - p * sum(g).
void SoftmaxChain(const double *logp, double *grad, std::size_t n) {
  double total = 0;
  for (std::size_t k = 0; k < n; ++k) total += grad[k];
  for (std::size_t k = 0; k < n; ++k) grad[k] -= std::exp(logp[k]) * total;
}

}  // namespace

Tensor<double> log_softmax(const Tensor<double> &logits) {
  if (logits.rank() == 0) throw DimensionError("log_softmax of a scalar");
  const std::size_t n = logits.shape().back();
  Tensor<double> out = logits;
  for (std::size_t r = 0; r < out.size() / n; ++r) {
    double *row = out.data() + r * n;
    const double mx = *std::max_element(row, row + n);
    double z = 0;
    for (std::size_t k = 0; k < n; ++k) z += std::exp(row[k] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t k = 0; k < n; ++k) row[k] -= lse;
  }
  return out;
}

RnntLattice rnnt_lattice(const Tensor<double> &logits,
                         std::span<const Label> targets) {
  RequireRank(logits.shape(), 3, "rnnt_loss");
  const std::size_t t_len = logits.dim(0), u1 = logits.dim(1),
                    v1 = logits.dim(2);
  if (t_len == 0) throw DimensionError("rnnt_loss: no encoder frames");
  if (u1 != targets.size() + 1) {
    throw DimensionError("rnnt_loss: logits " + ShapeToString(logits.shape()) +
                         " for " + std::to_string(targets.size()) + " targets");
  }
  if (v1 < 2) throw DimensionError("rnnt_loss: need at least one label and blank");
  CheckLabels(targets, v1 - 1);
  const Label blank = v1 - 1;
  const Tensor<double> logp = log_softmax(logits);
  auto blank_lp = [&](std::size_t t, std::size_t u) { return logp(t, u, blank); };
  auto emit_lp = [&](std::size_t t, std::size_t u) {
    return logp(t, u, targets[u]);
  };

  RnntLattice lat;
  lat.log_alpha = Tensor<double>(Shape{t_len, u1});
  lat.log_beta = Tensor<double>(Shape{t_len, u1});
  auto &a = lat.log_alpha;
  auto &b = lat.log_beta;
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t u = 0; u < u1; ++u) {
      if (t == 0 && u == 0) {
        a(t, u) = 0;
        continue;
      }
      double v = kNegInf;
      if (t > 0) v = a(t - 1, u) + blank_lp(t - 1, u);
      if (u > 0) v = LogAdd(v, a(t, u - 1) + emit_lp(t, u - 1));
      a(t, u) = v;
    }
  for (std::size_t t = t_len; t-- > 0;)
    for (std::size_t u = u1; u-- > 0;) {
      double v = kNegInf;
      if (t + 1 == t_len && u + 1 == u1) {
        v = blank_lp(t, u);
      } else {
        if (t + 1 < t_len) v = b(t + 1, u) + blank_lp(t, u);
        if (u + 1 < u1) v = LogAdd(v, b(t, u + 1) + emit_lp(t, u));
      }
      b(t, u) = v;
    }
  lat.log_prob = a(t_len - 1, u1 - 1) + blank_lp(t_len - 1, u1 - 1);
  return lat;
}

LossResult rnnt_loss_from_logits(const Tensor<double> &logits,
                                 std::span<const Label> targets) {
  const RnntLattice lat = rnnt_lattice(logits, targets);
  const std::size_t t_len = logits.dim(0), u1 = logits.dim(1),
                    v1 = logits.dim(2);
  const Label blank = v1 - 1;
  const Tensor<double> logp = log_softmax(logits);
  const auto &a = lat.log_alpha;
  const auto &b = lat.log_beta;
  LossResult result;
  result.loss = -lat.log_prob;
  result.grad_logits = Tensor<double>(logits.shape());
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t u = 0; u < u1; ++u) {
      double *g = result.grad_logits.data() + (t * u1 + u) * v1;
      // Posterior of taking each outgoing edge of node (t, u).
      const double next_blank = t + 1 < t_len ? b(t + 1, u)
                                : u + 1 == u1 ? 0.0
                                              : kNegInf;
      g[blank] = -std::exp(a(t, u) + logp(t, u, blank) + next_blank - lat.log_prob);
      if (u + 1 < u1) {
        g[targets[u]] = -std::exp(a(t, u) + logp(t, u, targets[u]) +
                                  b(t, u + 1) - lat.log_prob);
      }
      SoftmaxChain(logp.data() + (t * u1 + u) * v1, g, v1);
    }
  return result;
}

template <typename Real>
LossResult rnnt_loss(const Tensor<Real> &enc, std::span<const Label> targets,
                     const TransducerTail<Real> &tail) {
  const Tensor<Real> logits =
      joint_logits(tail, enc, predictor_outputs(tail, targets));
  return rnnt_loss_from_logits(logits.template cast<double>(), targets);
}

template LossResult rnnt_loss(const Tensor<float> &, std::span<const Label>,
                              const TransducerTail<float> &);
template LossResult rnnt_loss(const Tensor<double> &, std::span<const Label>,
                              const TransducerTail<double> &);

std::size_t CtcMinimumFrames(std::span<const Label> targets) {
  std::size_t n = targets.size();
  for (std::size_t i = 1; i < targets.size(); ++i)
    if (targets[i] == targets[i - 1]) ++n;
  return n;
}

LossResult ctc_loss(const Tensor<double> &logits, std::span<const Label> targets,
                    Label blank_id) {
  RequireRank(logits.shape(), 2, "ctc_loss");
  const std::size_t t_len = logits.dim(0), v1 = logits.dim(1);
  if (blank_id >= v1) {
    throw DimensionError("ctc_loss: blank " + std::to_string(blank_id) +
                         " outside " + std::to_string(v1) + " classes");
  }
  for (Label l : targets) {
    if (l >= v1 || l == blank_id) {
      throw DimensionError("ctc_loss: invalid target label " + std::to_string(l));
    }
  }
  const std::size_t required = CtcMinimumFrames(targets);
  if (t_len == 0 || t_len < required) {
    throw InfeasibleAlignmentError(
        "ctc_loss: " + std::to_string(t_len) + " frames cannot align " +
            std::to_string(targets.size()) + " labels; need at least " +
            std::to_string(std::max<std::size_t>(required, 1)),
        std::max<std::size_t>(required, 1));
  }

  // Extended target: blank, l1, blank, l2, ..., blank.
  const std::size_t s_len = 2 * targets.size() + 1;
  auto label_at = [&](std::size_t s) {
    return s % 2 == 0 ? blank_id : targets[s / 2];
  };
  auto can_skip = [&](std::size_t s) {
    return s >= 2 && s % 2 == 1 && label_at(s) != label_at(s - 2);
  };
  const Tensor<double> logp = log_softmax(logits);
  Tensor<double> alpha(Shape{t_len, s_len}), beta(Shape{t_len, s_len});
  for (auto &v : alpha.values()) v = kNegInf;
  for (auto &v : beta.values()) v = kNegInf;

  alpha(0, 0) = logp(0, label_at(0));
  if (s_len > 1) alpha(0, 1) = logp(0, label_at(1));
  for (std::size_t t = 1; t < t_len; ++t)
    for (std::size_t s = 0; s < s_len; ++s) {
      double v = alpha(t - 1, s);
      if (s >= 1) v = LogAdd(v, alpha(t - 1, s - 1));
      if (can_skip(s)) v = LogAdd(v, alpha(t - 1, s - 2));
      alpha(t, s) = v == kNegInf ? kNegInf : v + logp(t, label_at(s));
    }
  // beta(t, s): log probability of frames after t given state s at t.
  beta(t_len - 1, s_len - 1) = 0;
  if (s_len > 1) beta(t_len - 1, s_len - 2) = 0;
  for (std::size_t t = t_len - 1; t-- > 0;)
    for (std::size_t s = 0; s < s_len; ++s) {
      double v = beta(t + 1, s) + logp(t + 1, label_at(s));
      if (s + 1 < s_len)
        v = LogAdd(v, beta(t + 1, s + 1) + logp(t + 1, label_at(s + 1)));
      if (s + 2 < s_len && can_skip(s + 2))
        v = LogAdd(v, beta(t + 1, s + 2) + logp(t + 1, label_at(s + 2)));
      beta(t, s) = v;
    }

  double log_prob = alpha(t_len - 1, s_len - 1);
  if (s_len > 1) log_prob = LogAdd(log_prob, alpha(t_len - 1, s_len - 2));

  LossResult result;
  result.loss = -log_prob;
  result.grad_logits = Tensor<double>(logits.shape());
  for (std::size_t t = 0; t < t_len; ++t) {
    double *g = result.grad_logits.data() + t * v1;
    for (std::size_t s = 0; s < s_len; ++s) {
      const double occ = alpha(t, s) + beta(t, s);
      if (occ == kNegInf) continue;
      g[label_at(s)] -= std::exp(occ - log_prob);
    }
    SoftmaxChain(logp.data() + t * v1, g, v1);
  }
  return result;
}

}  // namespace sfl
