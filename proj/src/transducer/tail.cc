// src/transducer/tail.cc

#include "sfl/transducer/tail.h"

#include <cmath>

namespace sfl {

template <typename Real>
TransducerTail<Real> TransducerTail<Real>::Random(Rng &rng,
                                                  std::size_t encoder_dim,
                                                  const TransducerDims &dims) {
  const std::size_t v1 = dims.vocab + 1, p = dims.predictor_dim;
  TransducerTail t;
  t.vocab = dims.vocab;
  t.embedding = XavierUniform<Real>(rng, Shape{v1, p}, v1, p);
  t.lstm.w_input = XavierUniform<Real>(rng, Shape{p, 4 * p}, p, 4 * p);
  t.lstm.w_hidden = XavierUniform<Real>(rng, Shape{p, 4 * p}, p, 4 * p);
  t.lstm.bias = Tensor<Real>(Shape{4 * p});
  t.joint_enc = XavierUniform<Real>(rng, Shape{encoder_dim, p}, encoder_dim, p);
  t.joint_enc_bias = Tensor<Real>(Shape{p});
  t.joint_pred = XavierUniform<Real>(rng, Shape{p, p}, p, p);
  t.joint_out = XavierUniform<Real>(rng, Shape{p, v1}, p, v1);
  t.joint_out_bias = Tensor<Real>(Shape{v1});
  return t;
}

template <typename Real>
std::size_t TransducerTail<Real>::ParameterCount(std::size_t encoder_dim,
                                                 const TransducerDims &dims) {
  const std::size_t v1 = dims.vocab + 1, p = dims.predictor_dim;
  const std::size_t embedding = v1 * p;
  const std::size_t lstm = p * 4 * p + p * 4 * p + 4 * p;
  const std::size_t joint = encoder_dim * p + p + p * p + p * v1 + v1;
  return embedding + lstm + joint;
}

template <typename Real>
PredictorState<Real> PredictorStart(const TransducerTail<Real> &tail) {
  const std::size_t p = tail.predictor_dim();
  PredictorState<Real> zero{{Tensor<Real>(Shape{p}), Tensor<Real>(Shape{p})},
                            Tensor<Real>(Shape{p})};
  return PredictorAdvance(tail, zero, tail.blank_id());
}

template <typename Real>
PredictorState<Real> PredictorAdvance(const TransducerTail<Real> &tail,
                                      const PredictorState<Real> &state,
                                      Label label) {
  if (label > tail.vocab) {
    throw DimensionError("predictor: label " + std::to_string(label) +
                         " outside vocabulary of " +
                         std::to_string(tail.vocab));
  }
  const auto row = tail.embedding.row(label);
  const Tensor<Real> emb(Shape{row.size()},
                         std::vector<Real>(row.begin(), row.end()));
  PredictorState<Real> next;
  next.lstm = lstm_step(emb, state.lstm, tail.lstm);
  next.output = next.lstm.h;
  return next;
}

template <typename Real>
Tensor<Real> predictor_outputs(const TransducerTail<Real> &tail,
                               std::span<const Label> targets) {
  const std::size_t p = tail.predictor_dim();
  Tensor<Real> out(Shape{targets.size() + 1, p});
  PredictorState<Real> state = PredictorStart(tail);
  for (std::size_t u = 0;; ++u) {
    std::copy(state.output.storage().begin(), state.output.storage().end(),
              out.data() + u * p);
    if (u == targets.size()) break;
    if (targets[u] >= tail.vocab) {
      throw DimensionError("target label " + std::to_string(targets[u]) +
                           " outside [0, " + std::to_string(tail.vocab) + ")");
    }
    state = PredictorAdvance(tail, state, targets[u]);
  }
  return out;
}

template <typename Real>
Tensor<Real> joint_logits(const TransducerTail<Real> &tail,
                          const Tensor<Real> &enc,
                          const Tensor<Real> &predictor) {
  if (enc.rank() != 2 || enc.dim(1) != tail.encoder_dim()) {
    throw DimensionError("joint: encoder output " + ShapeToString(enc.shape()) +
                         " vs joint input width " +
                         std::to_string(tail.encoder_dim()));
  }
  const std::size_t t = enc.dim(0), u1 = predictor.dim(0),
                    p = tail.predictor_dim(), v1 = tail.vocab + 1;
  const Tensor<Real> enc_proj = linear(enc, tail.joint_enc, tail.joint_enc_bias);
  const Tensor<Real> pred_proj = linear(predictor, tail.joint_pred, Tensor<Real>{});
  Tensor<Real> logits(Shape{t, u1, v1});
  Tensor<Real> hidden(Shape{u1, p});
  for (std::size_t ti = 0; ti < t; ++ti) {
    for (std::size_t u = 0; u < u1; ++u)
      for (std::size_t c = 0; c < p; ++c)
        hidden(u, c) = std::tanh(enc_proj(ti, c) + pred_proj(u, c));
    const Tensor<Real> out = linear(hidden, tail.joint_out, tail.joint_out_bias);
    std::copy(out.storage().begin(), out.storage().end(),
              logits.data() + ti * u1 * v1);
  }
  return logits;
}

template <typename Real>
Tensor<Real> joint_step(const TransducerTail<Real> &tail,
                        std::span<const Real> enc_frame,
                        const Tensor<Real> &predictor_output) {
  const Tensor<Real> enc(Shape{1, enc_frame.size()},
                         std::vector<Real>(enc_frame.begin(), enc_frame.end()));
  const Tensor<Real> pred = predictor_output.reshaped(
      Shape{1, predictor_output.size()});
  return joint_logits(tail, enc, pred).reshaped(Shape{tail.vocab + 1});
}

#define SFL_INSTANTIATE_TAIL(Real)                                            \
  template struct TransducerTail<Real>;                                       \
  template PredictorState<Real> PredictorStart(const TransducerTail<Real> &); \
  template PredictorState<Real> PredictorAdvance(                             \
      const TransducerTail<Real> &, const PredictorState<Real> &, Label);     \
  template Tensor<Real> predictor_outputs(const TransducerTail<Real> &,       \
                                          std::span<const Label>);            \
  template Tensor<Real> joint_logits(const TransducerTail<Real> &,            \
                                     const Tensor<Real> &,                    \
                                     const Tensor<Real> &);                   \
  template Tensor<Real> joint_step(const TransducerTail<Real> &,              \
                                   std::span<const Real>,                     \
                                   const Tensor<Real> &);

SFL_INSTANTIATE_TAIL(float)
SFL_INSTANTIATE_TAIL(double)

#undef SFL_INSTANTIATE_TAIL

}  // namespace sfl
