// include/sfl/transducer/loss.h
//
// Transducer and CTC losses in log space, always in double precision.
//
// Transducer lattice over frames t < T and emitted-label counts u <= U:
//
//   alpha(0, 0) = 0
//   alpha(t, u) = logsumexp(alpha(t-1, u) + blank(t-1, u),
//                           alpha(t, u-1) + emit(t, u-1))
//   log P       = alpha(T-1, U) + blank(T-1, U)
//
// where blank(t, u) and emit(t, u) are log-softmax entries of the joint
// logits at (t, u) for blank and for target u.

#pragma once

#include <span>

#include "sfl/numerics/tensor.h"
#include "sfl/transducer/tail.h"

namespace sfl {

struct LossResult {
  double loss = 0;
  Tensor<double> grad_logits;  // same shape as the logits
};

struct RnntLattice {
  Tensor<double> log_alpha;  // [T, U + 1]
  Tensor<double> log_beta;   // [T, U + 1], includes the final blank
  double log_prob = 0;
};

// logits: [T, U + 1, V + 1]; blank is the last index.
RnntLattice rnnt_lattice(const Tensor<double> &logits,
                         std::span<const Label> targets);

LossResult rnnt_loss_from_logits(const Tensor<double> &logits,
                                 std::span<const Label> targets);

// Runs the predictor and joint of `tail` on enc [T, D], then the loss.
template <typename Real>
LossResult rnnt_loss(const Tensor<Real> &enc, std::span<const Label> targets,
                     const TransducerTail<Real> &tail);

// Frames a CTC alignment of `targets` needs: one per label plus one blank
// between each pair of equal neighbours.
std::size_t CtcMinimumFrames(std::span<const Label> targets);

// logits: [T, V + 1]. Throws InfeasibleAlignmentError when T is shorter than
// CtcMinimumFrames(targets).
LossResult ctc_loss(const Tensor<double> &logits, std::span<const Label> targets,
                    Label blank_id);

// Row-wise log-softmax of the last axis.
Tensor<double> log_softmax(const Tensor<double> &logits);

}  // namespace sfl
