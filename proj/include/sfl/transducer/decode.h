// include/sfl/transducer/decode.h

#pragma once

#include <span>

#include "sfl/transducer/tail.h"

namespace sfl {

// Greedy transducer decoding for one stream. Per encoder frame it emits the
// argmax label and advances the predictor until the argmax is blank or
// max_symbols_per_frame labels were emitted. The predictor state is output
// history, so it is carried across chunks; one instance per stream.
template <typename Real>
class GreedyDecoder {
 public:
  explicit GreedyDecoder(const TransducerTail<Real> &tail,
                         std::size_t max_symbols_per_frame = 10);

  // enc_chunk: [c, D]. Returns the labels emitted for this chunk.
  LabelSequence accept(const Tensor<Real> &enc_chunk);

  const LabelSequence &hypothesis() const { return hypothesis_; }
  void reset();

 private:
  const TransducerTail<Real> *tail_;
  std::size_t max_symbols_;
  PredictorState<Real> state_;
  LabelSequence hypothesis_;
};

template <typename Real>
LabelSequence greedy_decode(std::span<const Tensor<Real>> enc_chunks,
                            const TransducerTail<Real> &tail);

}  // namespace sfl
