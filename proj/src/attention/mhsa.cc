// src/attention/mhsa.cc

#include "sfl/attention/mhsa.h"

#include <cmath>

#include "sfl/numerics/ops.h"

namespace sfl {
namespace {

// Copy columns [h*dk, (h+1)*dk) of a [rows, D] matrix, adding bias if given.
template <typename Real>
Tensor<Real> HeadSlice(const Tensor<Real> &m, std::size_t h, std::size_t dk,
                       const Real *bias = nullptr) {
  const std::size_t rows = m.dim(0), d = m.dim(1);
  Tensor<Real> out(Shape{rows, dk});
  for (std::size_t i = 0; i < rows; ++i) {
    const Real *src = m.data() + i * d + h * dk;
    Real *dst = out.data() + i * dk;
    for (std::size_t c = 0; c < dk; ++c) dst[c] = src[c] + (bias ? bias[c] : 0);
  }
  return out;
}

template <typename Real>
void ScatterHead(Tensor<Real> &m, const Tensor<Real> &head, std::size_t h) {
  const std::size_t rows = m.dim(0), dk = head.dim(1);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t c = 0; c < dk; ++c) m(i, h * dk + c) += head(i, c);
}

// Per-head attention probabilities; scores are combined content + position
// terms, scaled, masked and normalized in place.
template <typename Real>
Tensor<Real> HeadProbabilities(const Tensor<Real> &q_u, const Tensor<Real> &q_v,
                               const Tensor<Real> &k_t, const Tensor<Real> &p_t,
                               const AttentionMask *mask, Real scale) {
  const std::size_t t = q_u.dim(0), dk = q_u.dim(1), np = p_t.dim(1);
  Tensor<Real> scores(Shape{t, t});
  GemmAccumulate(q_u.data(), dk, k_t.data(), t, scores.data(), t, t, dk, t);
  // Position scores for every (row, distance) pair, then gathered by i - j.
  Tensor<Real> pos(Shape{t, np});
  GemmAccumulate(q_v.data(), dk, p_t.data(), np, pos.data(), np, t, dk, np);
  for (std::size_t i = 0; i < t; ++i) {
    Real *row = scores.data() + i * t;
    const Real *prow = pos.data() + i * np;
    for (std::size_t j = 0; j < t; ++j)
      row[j] = (row[j] + prow[RelativeIndex(i, j, t)]) * scale;
  }
  MaskedSoftmaxRows(scores.data(), t, t, mask ? mask->bits().data() : nullptr);
  return scores;
}

template <typename Real>
void CheckInputs(const Tensor<Real> &x, const MhsaWeights<Real> &w,
                 const AttentionMask *mask) {
  w.Validate();
  if (x.rank() != 2 || x.dim(1) != w.d_model()) {
    throw DimensionError("mhsa: input " + ShapeToString(x.shape()) +
                         " vs model width " + std::to_string(w.d_model()));
  }
  if (mask && mask->t() != x.dim(0)) {
    throw DimensionError("mhsa: mask length " + std::to_string(mask->t()) +
                         " vs sequence length " + std::to_string(x.dim(0)));
  }
}

}  // namespace

template <typename Real>
void MhsaWeights<Real>::Validate() const {
  if (heads == 0) throw ConfigError("mhsa: heads must be >= 1");
  const std::size_t d = w_q.rank() == 2 ? w_q.dim(0) : 0;
  if (d == 0 || d % heads != 0) {
    throw ConfigError("mhsa: model width " + std::to_string(d) +
                      " not divisible by " + std::to_string(heads) + " heads");
  }
  const Shape sq{d, d};
  RequireSameShape(w_q.shape(), sq, "mhsa w_q");
  RequireSameShape(w_k.shape(), sq, "mhsa w_k");
  RequireSameShape(w_v.shape(), sq, "mhsa w_v");
  RequireSameShape(w_o.shape(), sq, "mhsa w_o");
  RequireSameShape(w_pos.shape(), sq, "mhsa w_pos");
  const Shape hb{heads, d / heads};
  RequireSameShape(u_bias.shape(), hb, "mhsa u_bias");
  RequireSameShape(v_bias.shape(), hb, "mhsa v_bias");
}

template <typename Real>
MhsaWeights<Real> MhsaWeights<Real>::Zeros(std::size_t d, std::size_t heads) {
  if (heads == 0 || d % heads != 0) {
    throw ConfigError("mhsa: model width " + std::to_string(d) +
                      " not divisible by " + std::to_string(heads) + " heads");
  }
  MhsaWeights w;
  w.heads = heads;
  for (auto *m : {&w.w_q, &w.w_k, &w.w_v, &w.w_o, &w.w_pos})
    *m = Tensor<Real>(Shape{d, d});
  w.u_bias = Tensor<Real>(Shape{heads, d / heads});
  w.v_bias = Tensor<Real>(Shape{heads, d / heads});
  return w;
}

template <typename Real>
MhsaWeights<Real> MhsaWeights<Real>::Random(Rng &rng, std::size_t d,
                                            std::size_t heads) {
  MhsaWeights w = Zeros(d, heads);
  for (auto *m : {&w.w_q, &w.w_k, &w.w_v, &w.w_o, &w.w_pos})
    *m = XavierUniform<Real>(rng, Shape{d, d}, d, d);
  // Content/position biases start at zero like other biases.
  return w;
}

template <typename Real>
std::size_t MhsaWeights<Real>::ParameterCount(std::size_t d) {
  return 5 * d * d + 2 * d;
}

template <typename Real>
Tensor<Real> RelativePositionTable(std::size_t t, std::size_t d) {
  Tensor<Real> pe(Shape{2 * t - 1, d});
  for (std::size_t r = 0; r < 2 * t - 1; ++r) {
    const double dist =
        static_cast<double>(r) - static_cast<double>(t - 1);
    for (std::size_t c = 0; c < d; c += 2) {
      const double freq =
          std::pow(10000.0, -static_cast<double>(c) / static_cast<double>(d));
      pe(r, c) = static_cast<Real>(std::sin(dist * freq));
      if (c + 1 < d) pe(r, c + 1) = static_cast<Real>(std::cos(dist * freq));
    }
  }
  return pe;
}

template <typename Real>
MhsaOutput<Real> mhsa_forward(const Tensor<Real> &x, const MhsaWeights<Real> &w,
                              const AttentionMask *mask, bool keep_maps) {
  CheckInputs(x, w, mask);
  const std::size_t t = x.dim(0), d = w.d_model(), heads = w.heads;
  const std::size_t dk = w.head_dim();
  const Real scale = Real(1) / std::sqrt(static_cast<Real>(dk));

  const Tensor<Real> empty;
  const Tensor<Real> q = linear(x, w.w_q, empty);
  const Tensor<Real> k = linear(x, w.w_k, empty);
  const Tensor<Real> v = linear(x, w.w_v, empty);
  const Tensor<Real> p = linear(RelativePositionTable<Real>(t, d), w.w_pos, empty);

  MhsaOutput<Real> out;
  if (keep_maps) out.maps = Tensor<Real>(Shape{heads, t, t});
  Tensor<Real> context(Shape{t, d});
  for (std::size_t h = 0; h < heads; ++h) {
    const Tensor<Real> q_u = HeadSlice(q, h, dk, w.u_bias.data() + h * dk);
    const Tensor<Real> q_v = HeadSlice(q, h, dk, w.v_bias.data() + h * dk);
    const Tensor<Real> k_t = transpose(HeadSlice(k, h, dk));
    const Tensor<Real> p_t = transpose(HeadSlice(p, h, dk));
    const Tensor<Real> probs = HeadProbabilities(q_u, q_v, k_t, p_t, mask, scale);
    // Context for this head goes straight into its column block.
    GemmAccumulate(probs.data(), t, v.data() + h * dk, d,
                   context.data() + h * dk, d, t, t, dk);
    if (keep_maps) {
      std::copy(probs.storage().begin(), probs.storage().end(),
                out.maps.data() + h * t * t);
    }
  }
  out.y = linear(context, w.w_o, empty);
  return out;
}

template <typename Real>
MhsaGrads<Real> mhsa_backward(const Tensor<Real> &x, const MhsaWeights<Real> &w,
                              const AttentionMask *mask,
                              const Tensor<Real> &upstream) {
  CheckInputs(x, w, mask);
  const std::size_t t = x.dim(0), d = w.d_model(), heads = w.heads;
  const std::size_t dk = w.head_dim(), np = 2 * t - 1;
  RequireSameShape(upstream.shape(), Shape{t, d}, "mhsa_backward upstream");
  const Real scale = Real(1) / std::sqrt(static_cast<Real>(dk));

  const Tensor<Real> empty;
  const Tensor<Real> pe = RelativePositionTable<Real>(t, d);
  const Tensor<Real> q = linear(x, w.w_q, empty);
  const Tensor<Real> k = linear(x, w.w_k, empty);
  const Tensor<Real> v = linear(x, w.w_v, empty);
  const Tensor<Real> p = linear(pe, w.w_pos, empty);

  MhsaGrads<Real> g{Tensor<Real>(x.shape()), MhsaWeights<Real>::Zeros(d, heads)};
  Tensor<Real> context(Shape{t, d});
  Tensor<Real> d_q(Shape{t, d}), d_k(Shape{t, d}), d_v(Shape{t, d}),
      d_p(Shape{np, d});
  const Tensor<Real> d_context = matmul_nt(upstream, w.w_o);

  for (std::size_t h = 0; h < heads; ++h) {
    const Tensor<Real> q_u = HeadSlice(q, h, dk, w.u_bias.data() + h * dk);
    const Tensor<Real> q_v = HeadSlice(q, h, dk, w.v_bias.data() + h * dk);
    const Tensor<Real> k_h = HeadSlice(k, h, dk);
    const Tensor<Real> p_h = HeadSlice(p, h, dk);
    const Tensor<Real> v_h = HeadSlice(v, h, dk);
    const Tensor<Real> probs = HeadProbabilities(q_u, q_v, transpose(k_h),
                                                 transpose(p_h), mask, scale);
    ScatterHead(context, matmul(probs, v_h), h);

    const Tensor<Real> dctx_h = HeadSlice(d_context, h, dk);
    const Tensor<Real> d_probs = matmul_nt(dctx_h, v_h);
    ScatterHead(d_v, matmul_tn(probs, dctx_h), h);

    Tensor<Real> d_scores = masked_softmax_backward(probs, d_probs);
    for (auto &v : d_scores.values()) v *= scale;

    // Content term: (q + u) . k
    Tensor<Real> dq_h = matmul(d_scores, k_h);
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t c = 0; c < dk; ++c) g.w.u_bias(h, c) += dq_h(i, c);
    ScatterHead(d_k, matmul_tn(d_scores, q_u), h);

    // Position term: (q + v) . p_{i-j}
    Tensor<Real> dq_pos(Shape{t, dk});
    Tensor<Real> dp_h(Shape{np, dk});
    for (std::size_t i = 0; i < t; ++i) {
      for (std::size_t j = 0; j < t; ++j) {
        const Real s = d_scores(i, j);
        const std::size_t r = RelativeIndex(i, j, t);
        for (std::size_t c = 0; c < dk; ++c) {
          dq_pos(i, c) += s * p_h(r, c);
          dp_h(r, c) += s * q_v(i, c);
        }
      }
    }
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t c = 0; c < dk; ++c) g.w.v_bias(h, c) += dq_pos(i, c);
    AddInPlace(dq_h, dq_pos);
    ScatterHead(d_q, dq_h, h);
    ScatterHead(d_p, dp_h, h);
  }

  g.w.w_o = matmul_tn(context, upstream);
  g.w.w_q = matmul_tn(x, d_q);
  g.w.w_k = matmul_tn(x, d_k);
  g.w.w_v = matmul_tn(x, d_v);
  g.w.w_pos = matmul_tn(pe, d_p);
  g.x = matmul_nt(d_q, w.w_q);
  AddInPlace(g.x, matmul_nt(d_k, w.w_k));
  AddInPlace(g.x, matmul_nt(d_v, w.w_v));
  return g;
}

template struct MhsaWeights<float>;
template struct MhsaWeights<double>;
template Tensor<float> RelativePositionTable(std::size_t, std::size_t);
template Tensor<double> RelativePositionTable(std::size_t, std::size_t);
template MhsaOutput<float> mhsa_forward(const Tensor<float> &,
                                        const MhsaWeights<float> &,
                                        const AttentionMask *, bool);
template MhsaOutput<double> mhsa_forward(const Tensor<double> &,
                                         const MhsaWeights<double> &,
                                         const AttentionMask *, bool);
template MhsaGrads<float> mhsa_backward(const Tensor<float> &,
                                        const MhsaWeights<float> &,
                                        const AttentionMask *,
                                        const Tensor<float> &);
template MhsaGrads<double> mhsa_backward(const Tensor<double> &,
                                         const MhsaWeights<double> &,
                                         const AttentionMask *,
                                         const Tensor<double> &);

}  // namespace sfl
