// src/numerics/ops.cc

#include "sfl/numerics/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sfl {

template <typename Real>
void GemmAccumulate(const Real *a, std::size_t lda, const Real *b,
                    std::size_t ldb, Real *c, std::size_t ldc, std::size_t m,
                    std::size_t k, std::size_t n) {
  // i-k-j order: the inner loop is a contiguous axpy the compiler vectorizes,
  // and every c[i][j] still sums its k terms in increasing order.
  for (std::size_t i = 0; i < m; ++i) {
    Real *__restrict crow = c + i * ldc;
    const Real *arow = a + i * lda;
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = arow[p];
      const Real *__restrict brow = b + p * ldb;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename Real>
Tensor<Real> matmul(const Tensor<Real> &a, const Tensor<Real> &b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: cannot multiply " + ShapeToString(a.shape()) +
                         " by " + ShapeToString(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor<Real> c(Shape{m, n});
  GemmAccumulate(a.data(), k, b.data(), n, c.data(), n, m, k, n);
  return c;
}

template <typename Real>
Tensor<Real> transpose(const Tensor<Real> &a) {
  RequireRank(a.shape(), 2, "transpose");
  const std::size_t r = a.dim(0), c = a.dim(1);
  Tensor<Real> t(Shape{c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) t(j, i) = a(i, j);
  return t;
}

template <typename Real>
Tensor<Real> matmul_tn(const Tensor<Real> &a, const Tensor<Real> &b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0)) {
    throw DimensionError("matmul_tn: cannot multiply transpose of " +
                         ShapeToString(a.shape()) + " by " +
                         ShapeToString(b.shape()));
  }
  return matmul(transpose(a), b);
}

template <typename Real>
Tensor<Real> matmul_nt(const Tensor<Real> &a, const Tensor<Real> &b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1)) {
    throw DimensionError("matmul_nt: cannot multiply " +
                         ShapeToString(a.shape()) + " by transpose of " +
                         ShapeToString(b.shape()));
  }
  return matmul(a, transpose(b));
}

template <typename Real>
Tensor<Real> linear(const Tensor<Real> &x, const Tensor<Real> &w,
                    const Tensor<Real> &bias) {
  RequireRank(w.shape(), 2, "linear weight");
  const std::size_t in = w.dim(0), out = w.dim(1);
  if (x.rank() == 0 || x.shape().back() != in) {
    throw DimensionError("linear: input " + ShapeToString(x.shape()) +
                         " incompatible with weight " +
                         ShapeToString(w.shape()));
  }
  if (!bias.empty() && bias.size() != out) {
    throw DimensionError("linear: bias " + ShapeToString(bias.shape()) +
                         " incompatible with weight " +
                         ShapeToString(w.shape()));
  }
  const std::size_t rows = x.size() / in;
  Shape s = x.shape();
  s.back() = out;
  Tensor<Real> y(std::move(s));
  if (!bias.empty()) {
    for (std::size_t r = 0; r < rows; ++r)
      std::copy(bias.data(), bias.data() + out, y.data() + r * out);
  }
  GemmAccumulate(x.data(), in, w.data(), out, y.data(), out, rows, in, out);
  return y;
}

template <typename Real>
void AddInPlace(Tensor<Real> &acc, const Tensor<Real> &x, Real scale) {
  RequireSameShape(acc.shape(), x.shape(), "AddInPlace");
  Real *a = acc.data();
  const Real *b = x.data();
  for (std::size_t i = 0; i < acc.size(); ++i) a[i] += scale * b[i];
}

template <typename Real>
void MaskedSoftmaxRows(Real *scores, std::size_t rows, std::size_t cols,
                       const std::uint8_t *mask) {
  const Real masked = static_cast<Real>(kMaskedScore);
  for (std::size_t i = 0; i < rows; ++i) {
    Real *row = scores + i * cols;
    if (mask) {
      const std::uint8_t *m = mask + i * cols;
      bool any = false;
      for (std::size_t j = 0; j < cols; ++j) {
        if (!m[j]) {
          row[j] += masked;
        } else {
          any = true;
        }
      }
      if (!any) {
        throw InvalidMaskError("masked_softmax: row " + std::to_string(i) +
                               " is fully masked");
      }
    }
    Real mx = -std::numeric_limits<Real>::infinity();
    for (std::size_t j = 0; j < cols; ++j) mx = std::max(mx, row[j]);
    Real sum = 0;
    for (std::size_t j = 0; j < cols; ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    const Real inv = Real(1) / sum;
    for (std::size_t j = 0; j < cols; ++j) row[j] *= inv;
    if (mask) {
      // exp of a -1e9 offset underflows to zero already; force it so the
      // property holds even for extreme unmasked scores.
      const std::uint8_t *m = mask + i * cols;
      for (std::size_t j = 0; j < cols; ++j)
        if (!m[j]) row[j] = 0;
    }
  }
}

template <typename Real>
Tensor<Real> masked_softmax(const Tensor<Real> &scores,
                            const BinaryMask &mask) {
  if (scores.rank() < 2) {
    throw DimensionError("masked_softmax: scores need rank >= 2, got " +
                         ShapeToString(scores.shape()));
  }
  const std::size_t t_rows = scores.dim(scores.rank() - 2);
  const std::size_t t_cols = scores.dim(scores.rank() - 1);
  if (mask.rank() != 2 || mask.dim(0) != t_rows || mask.dim(1) != t_cols) {
    throw DimensionError("masked_softmax: mask " + ShapeToString(mask.shape()) +
                         " vs scores " + ShapeToString(scores.shape()));
  }
  Tensor<Real> out = scores;
  const std::size_t blocks = scores.size() / (t_rows * t_cols);
  for (std::size_t b = 0; b < blocks; ++b) {
    MaskedSoftmaxRows(out.data() + b * t_rows * t_cols, t_rows, t_cols,
                      mask.data());
  }
  return out;
}

template <typename Real>
Tensor<Real> masked_softmax_backward(const Tensor<Real> &probs,
                                     const Tensor<Real> &upstream) {
  RequireSameShape(probs.shape(), upstream.shape(), "masked_softmax_backward");
  if (probs.rank() == 0) return probs;
  const std::size_t cols = probs.shape().back();
  const std::size_t rows = cols ? probs.size() / cols : 0;
  Tensor<Real> g(probs.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const Real *p = probs.data() + r * cols;
    const Real *u = upstream.data() + r * cols;
    Real dot = 0;
    for (std::size_t j = 0; j < cols; ++j) dot += p[j] * u[j];
    Real *out = g.data() + r * cols;
    for (std::size_t j = 0; j < cols; ++j) out[j] = p[j] * (u[j] - dot);
  }
  return g;
}

template <typename Real>
Tensor<Real> layer_norm(const Tensor<Real> &x, const Tensor<Real> &gamma,
                        const Tensor<Real> &beta, double eps) {
  if (x.rank() == 0 || x.shape().back() == 0) {
    throw DimensionError("layer_norm: empty feature axis in " +
                         ShapeToString(x.shape()));
  }
  const std::size_t d = x.shape().back();
  if (gamma.size() != d || beta.size() != d) {
    throw DimensionError("layer_norm: affine params " +
                         ShapeToString(gamma.shape()) + "/" +
                         ShapeToString(beta.shape()) + " vs input " +
                         ShapeToString(x.shape()));
  }
  Tensor<Real> y(x.shape());
  const std::size_t rows = x.size() / d;
  const Real e = static_cast<Real>(eps);
  for (std::size_t r = 0; r < rows; ++r) {
    const Real *in = x.data() + r * d;
    Real *out = y.data() + r * d;
    Real mean = 0;
    for (std::size_t i = 0; i < d; ++i) mean += in[i];
    mean /= static_cast<Real>(d);
    Real var = 0;
    for (std::size_t i = 0; i < d; ++i) var += (in[i] - mean) * (in[i] - mean);
    var /= static_cast<Real>(d);
    const Real inv = Real(1) / std::sqrt(var + e);
    for (std::size_t i = 0; i < d; ++i)
      out[i] = (in[i] - mean) * inv * gamma[i] + beta[i];
  }
  return y;
}

template <typename Real>
LayerNormGrads<Real> layer_norm_backward(const Tensor<Real> &x,
                                         const Tensor<Real> &gamma,
                                         const Tensor<Real> &upstream,
                                         double eps) {
  RequireSameShape(x.shape(), upstream.shape(), "layer_norm_backward");
  const std::size_t d = x.shape().back();
  if (gamma.size() != d) {
    throw DimensionError("layer_norm_backward: gamma " +
                         ShapeToString(gamma.shape()) + " vs input " +
                         ShapeToString(x.shape()));
  }
  LayerNormGrads<Real> g{Tensor<Real>(x.shape()), Tensor<Real>(Shape{d}),
                         Tensor<Real>(Shape{d})};
  const std::size_t rows = x.size() / d;
  const Real e = static_cast<Real>(eps);
  std::vector<Real> xhat(d), dxhat(d);
  for (std::size_t r = 0; r < rows; ++r) {
    const Real *in = x.data() + r * d;
    const Real *up = upstream.data() + r * d;
    Real mean = 0;
    for (std::size_t i = 0; i < d; ++i) mean += in[i];
    mean /= static_cast<Real>(d);
    Real var = 0;
    for (std::size_t i = 0; i < d; ++i) var += (in[i] - mean) * (in[i] - mean);
    var /= static_cast<Real>(d);
    const Real inv = Real(1) / std::sqrt(var + e);
    Real sum_dxhat = 0, sum_dxhat_xhat = 0;
    for (std::size_t i = 0; i < d; ++i) {
      xhat[i] = (in[i] - mean) * inv;
      dxhat[i] = up[i] * gamma[i];
      g.gamma[i] += up[i] * xhat[i];
      g.beta[i] += up[i];
      sum_dxhat += dxhat[i];
      sum_dxhat_xhat += dxhat[i] * xhat[i];
    }
    Real *dx = g.x.data() + r * d;
    const Real n = static_cast<Real>(d);
    for (std::size_t i = 0; i < d; ++i) {
      dx[i] = inv * (dxhat[i] - sum_dxhat / n - xhat[i] * sum_dxhat_xhat / n);
    }
  }
  return g;
}

template <typename Real>
Real sigmoid(Real x) {
  if (x >= 0) return Real(1) / (Real(1) + std::exp(-x));
  const Real e = std::exp(x);
  return e / (Real(1) + e);
}

template <typename Real>
void SwishInPlace(Tensor<Real> &x) {
  for (auto &v : x.values()) v = v * sigmoid(v);
}

template <typename Real>
Tensor<Real> swish(const Tensor<Real> &x) {
  Tensor<Real> y = x;
  SwishInPlace(y);
  return y;
}

template <typename Real>
Tensor<Real> swish_backward(const Tensor<Real> &x,
                            const Tensor<Real> &upstream) {
  RequireSameShape(x.shape(), upstream.shape(), "swish_backward");
  Tensor<Real> g(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Real s = sigmoid(x[i]);
    g[i] = upstream[i] * (s + x[i] * s * (Real(1) - s));
  }
  return g;
}

template <typename Real>
Tensor<Real> glu(const Tensor<Real> &x) {
  if (x.rank() == 0 || x.shape().back() % 2 != 0) {
    throw DimensionError("glu: last dimension must be even, got shape " +
                         ShapeToString(x.shape()));
  }
  const std::size_t two_d = x.shape().back(), d = two_d / 2;
  Shape s = x.shape();
  s.back() = d;
  Tensor<Real> y(std::move(s));
  const std::size_t rows = x.size() / two_d;
  for (std::size_t r = 0; r < rows; ++r) {
    const Real *in = x.data() + r * two_d;
    Real *out = y.data() + r * d;
    for (std::size_t i = 0; i < d; ++i) out[i] = in[i] * sigmoid(in[d + i]);
  }
  return y;
}

template <typename Real>
Tensor<Real> glu_backward(const Tensor<Real> &x, const Tensor<Real> &upstream) {
  if (x.rank() == 0 || x.shape().back() % 2 != 0) {
    throw DimensionError("glu_backward: last dimension must be even, got " +
                         ShapeToString(x.shape()));
  }
  const std::size_t two_d = x.shape().back(), d = two_d / 2;
  if (upstream.size() * 2 != x.size()) {
    throw DimensionError("glu_backward: upstream " +
                         ShapeToString(upstream.shape()) + " vs input " +
                         ShapeToString(x.shape()));
  }
  Tensor<Real> g(x.shape());
  const std::size_t rows = x.size() / two_d;
  for (std::size_t r = 0; r < rows; ++r) {
    const Real *in = x.data() + r * two_d;
    const Real *up = upstream.data() + r * d;
    Real *out = g.data() + r * two_d;
    for (std::size_t i = 0; i < d; ++i) {
      const Real s = sigmoid(in[d + i]);
      out[i] = up[i] * s;
      out[d + i] = up[i] * in[i] * s * (Real(1) - s);
    }
  }
  return g;
}

template <typename Real>
Tensor<Real> depthwise_conv1d(const Tensor<Real> &x, const Tensor<Real> &kernel,
                              const Tensor<Real> &bias) {
  RequireRank(x.shape(), 2, "depthwise_conv1d input");
  RequireRank(kernel.shape(), 2, "depthwise_conv1d kernel");
  const std::size_t t = x.dim(0), c = x.dim(1), k = kernel.dim(1);
  if (kernel.dim(0) != c) {
    throw DimensionError("depthwise_conv1d: kernel " +
                         ShapeToString(kernel.shape()) + " vs input " +
                         ShapeToString(x.shape()));
  }
  if (k % 2 == 0) {
    throw ConfigError("depthwise_conv1d: kernel size must be odd, got " +
                      std::to_string(k));
  }
  if (!bias.empty() && bias.size() != c) {
    throw DimensionError("depthwise_conv1d: bias " +
                         ShapeToString(bias.shape()) + " vs channels " +
                         std::to_string(c));
  }
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(k / 2);
  const auto tt = static_cast<std::ptrdiff_t>(t);
  Tensor<Real> y(Shape{t, c});
  // Transposed kernel [K, C] so the channel loop is contiguous.
  std::vector<Real> kt(k * c);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t j = 0; j < k; ++j) kt[j * c + ch] = kernel(ch, j);
  for (std::ptrdiff_t p = 0; p < tt; ++p) {
    Real *out = y.data() + p * c;
    if (!bias.empty()) std::copy(bias.data(), bias.data() + c, out);
    for (std::size_t j = 0; j < k; ++j) {
      const std::ptrdiff_t src = p + static_cast<std::ptrdiff_t>(j) - half;
      if (src < 0 || src >= tt) continue;
      const Real *in = x.data() + src * c;
      const Real *w = kt.data() + j * c;
      for (std::size_t ch = 0; ch < c; ++ch) out[ch] += w[ch] * in[ch];
    }
  }
  return y;
}

template <typename Real>
LstmState<Real> lstm_step(const Tensor<Real> &x, const LstmState<Real> &state,
                          const LstmWeights<Real> &w) {
  const std::size_t h = w.hidden();
  if (w.w_input.rank() != 2 || w.w_input.dim(1) != 4 * h ||
      w.w_hidden.dim(1) != 4 * h || w.bias.size() != 4 * h) {
    throw DimensionError("lstm_step: inconsistent weights " +
                         ShapeToString(w.w_input.shape()) + ", " +
                         ShapeToString(w.w_hidden.shape()) + ", " +
                         ShapeToString(w.bias.shape()));
  }
  if (x.size() != w.input() || state.h.size() != h || state.c.size() != h) {
    throw DimensionError("lstm_step: input " + ShapeToString(x.shape()) +
                         " / state " + ShapeToString(state.h.shape()) +
                         " vs weights " + ShapeToString(w.w_input.shape()));
  }
  std::vector<Real> gates(w.bias.storage());
  GemmAccumulate(x.data(), x.size(), w.w_input.data(), 4 * h, gates.data(),
                 4 * h, 1, x.size(), 4 * h);
  GemmAccumulate(state.h.data(), h, w.w_hidden.data(), 4 * h, gates.data(),
                 4 * h, 1, h, 4 * h);
  LstmState<Real> next{Tensor<Real>(Shape{h}), Tensor<Real>(Shape{h})};
  for (std::size_t i = 0; i < h; ++i) {
    const Real in_gate = sigmoid(gates[i]);
    const Real forget = sigmoid(gates[h + i]);
    const Real cell = std::tanh(gates[2 * h + i]);
    const Real out_gate = sigmoid(gates[3 * h + i]);
    next.c[i] = forget * state.c[i] + in_gate * cell;
    next.h[i] = out_gate * std::tanh(next.c[i]);
  }
  return next;
}

#define SFL_INSTANTIATE_OPS(Real)                                             \
  template void GemmAccumulate(const Real *, std::size_t, const Real *,       \
                               std::size_t, Real *, std::size_t, std::size_t, \
                               std::size_t, std::size_t);                     \
  template Tensor<Real> matmul(const Tensor<Real> &, const Tensor<Real> &);   \
  template Tensor<Real> matmul_tn(const Tensor<Real> &, const Tensor<Real> &); \
  template Tensor<Real> matmul_nt(const Tensor<Real> &, const Tensor<Real> &); \
  template Tensor<Real> transpose(const Tensor<Real> &);                      \
  template Tensor<Real> linear(const Tensor<Real> &, const Tensor<Real> &,    \
                               const Tensor<Real> &);                         \
  template void AddInPlace(Tensor<Real> &, const Tensor<Real> &, Real);       \
  template void MaskedSoftmaxRows(Real *, std::size_t, std::size_t,           \
                                  const std::uint8_t *);                      \
  template Tensor<Real> masked_softmax(const Tensor<Real> &,                  \
                                       const BinaryMask &);                   \
  template Tensor<Real> masked_softmax_backward(const Tensor<Real> &,        \
                                                const Tensor<Real> &);       \
  template Tensor<Real> layer_norm(const Tensor<Real> &, const Tensor<Real> &, \
                                   const Tensor<Real> &, double);             \
  template LayerNormGrads<Real> layer_norm_backward(                          \
      const Tensor<Real> &, const Tensor<Real> &, const Tensor<Real> &,       \
      double);                                                                \
  template Real sigmoid(Real);                                                \
  template Tensor<Real> swish(const Tensor<Real> &);                          \
  template Tensor<Real> swish_backward(const Tensor<Real> &,                  \
                                       const Tensor<Real> &);                 \
  template void SwishInPlace(Tensor<Real> &);                                 \
  template Tensor<Real> glu(const Tensor<Real> &);                            \
  template Tensor<Real> glu_backward(const Tensor<Real> &,                    \
                                     const Tensor<Real> &);                   \
  template Tensor<Real> depthwise_conv1d(                                     \
      const Tensor<Real> &, const Tensor<Real> &, const Tensor<Real> &);      \
  template LstmState<Real> lstm_step(const Tensor<Real> &,                    \
                                     const LstmState<Real> &,                 \
                                     const LstmWeights<Real> &);

SFL_INSTANTIATE_OPS(float)
SFL_INSTANTIATE_OPS(double)

#undef SFL_INSTANTIATE_OPS

}  // namespace sfl
