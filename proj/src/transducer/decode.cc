// src/transducer/decode.cc

#include "sfl/transducer/decode.h"

#include <algorithm>

namespace sfl {

template <typename Real>
GreedyDecoder<Real>::GreedyDecoder(const TransducerTail<Real> &tail,
                                   std::size_t max_symbols_per_frame)
    : tail_(&tail),
      max_symbols_(max_symbols_per_frame),
      state_(PredictorStart(tail)) {}

template <typename Real>
void GreedyDecoder<Real>::reset() {
  state_ = PredictorStart(*tail_);
  hypothesis_.clear();
}

template <typename Real>
LabelSequence GreedyDecoder<Real>::accept(const Tensor<Real> &enc_chunk) {
  if (enc_chunk.rank() != 2 || enc_chunk.dim(1) != tail_->encoder_dim()) {
    throw DimensionError("decode: chunk " + ShapeToString(enc_chunk.shape()) +
                         " vs encoder width " +
                         std::to_string(tail_->encoder_dim()));
  }
  LabelSequence emitted;
  for (std::size_t t = 0; t < enc_chunk.dim(0); ++t) {
    for (std::size_t n = 0; n < max_symbols_; ++n) {
      const Tensor<Real> logits = joint_step(*tail_, enc_chunk.row(t), state_.output);
      const auto values = logits.values();
      const Label best = static_cast<Label>(
          std::max_element(values.begin(), values.end()) - values.begin());
      if (best == tail_->blank_id()) break;
      emitted.push_back(best);
      state_ = PredictorAdvance(*tail_, state_, best);
    }
  }
  hypothesis_.insert(hypothesis_.end(), emitted.begin(), emitted.end());
  return emitted;
}

template <typename Real>
LabelSequence greedy_decode(std::span<const Tensor<Real>> enc_chunks,
                            const TransducerTail<Real> &tail) {
  GreedyDecoder<Real> decoder(tail);
  for (const auto &chunk : enc_chunks) decoder.accept(chunk);
  return decoder.hypothesis();
}

template class GreedyDecoder<float>;
template class GreedyDecoder<double>;
template LabelSequence greedy_decode(std::span<const Tensor<float>>,
                                     const TransducerTail<float> &);
template LabelSequence greedy_decode(std::span<const Tensor<double>>,
                                     const TransducerTail<double> &);

}  // namespace sfl
