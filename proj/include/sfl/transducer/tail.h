// include/sfl/transducer/tail.h
//
// Transducer tail: LSTM predictor over the non-blank label history and an
// additive joint network,
//
//   logits(t, u) = W_out tanh(W_enc enc_t + b_enc + W_pred g_u) + b_out
//
// over V labels plus blank at index V. The predictor starts from the blank
// embedding, so g_0 sees no label.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sfl/numerics/ops.h"
#include "sfl/numerics/rng.h"
#include "sfl/numerics/tensor.h"

namespace sfl {

using Label = std::size_t;
using LabelSequence = std::vector<Label>;

struct TransducerDims {
  std::size_t vocab = 64;            // labels, excluding blank
  std::size_t predictor_dim = 512;   // embedding, LSTM hidden and joint width
};

template <typename Real>
struct TransducerTail {
  std::size_t vocab = 0;
  Tensor<Real> embedding;       // [V + 1, P]
  LstmWeights<Real> lstm;       // P -> P
  Tensor<Real> joint_enc;       // [D, P]
  Tensor<Real> joint_enc_bias;  // [P]
  Tensor<Real> joint_pred;      // [P, P]
  Tensor<Real> joint_out;       // [P, V + 1]
  Tensor<Real> joint_out_bias;  // [V + 1]

  Label blank_id() const { return vocab; }
  std::size_t predictor_dim() const { return embedding.dim(1); }
  std::size_t encoder_dim() const { return joint_enc.dim(0); }

  static TransducerTail Random(Rng &rng, std::size_t encoder_dim,
                               const TransducerDims &dims);
  static std::size_t ParameterCount(std::size_t encoder_dim,
                                    const TransducerDims &dims);
};

// Predictor output after consuming `history` (non-blank labels only).
template <typename Real>
struct PredictorState {
  LstmState<Real> lstm;
  Tensor<Real> output;  // [P]
};

template <typename Real>
PredictorState<Real> PredictorStart(const TransducerTail<Real> &tail);

template <typename Real>
PredictorState<Real> PredictorAdvance(const TransducerTail<Real> &tail,
                                      const PredictorState<Real> &state,
                                      Label label);

// Predictor outputs g_0 .. g_U for a target sequence, [U + 1, P].
template <typename Real>
Tensor<Real> predictor_outputs(const TransducerTail<Real> &tail,
                               std::span<const Label> targets);

// Joint logits for every (t, u): [T, U + 1, V + 1].
template <typename Real>
Tensor<Real> joint_logits(const TransducerTail<Real> &tail,
                          const Tensor<Real> &enc,
                          const Tensor<Real> &predictor);

// Joint logits for one encoder frame and one predictor output: [V + 1].
template <typename Real>
Tensor<Real> joint_step(const TransducerTail<Real> &tail,
                        std::span<const Real> enc_frame,
                        const Tensor<Real> &predictor_output);

}  // namespace sfl
