// src/deformconv/deform_conv.cc

#include "sfl/deformconv/deform_conv.h"

#include <cmath>

#include "sfl/numerics/ops.h"

namespace sfl {
namespace {

// Linear interpolation weights for one sample position.
struct Tap {
  std::ptrdiff_t lo;  // floor(s)
  double frac;        // s - floor(s)
};

inline Tap MakeTap(double s) {
  const double f = std::floor(s);
  return {static_cast<std::ptrdiff_t>(f), s - f};
}

template <typename Real>
inline Real Read(const Tensor<Real> &x, std::ptrdiff_t t, std::size_t c) {
  if (t < 0 || t >= static_cast<std::ptrdiff_t>(x.dim(0))) return Real(0);
  return x(static_cast<std::size_t>(t), c);
}

template <typename Real>
void CheckShapes(const Tensor<Real> &x, const DeformWeights<Real> &w) {
  w.Validate();
  if (x.rank() != 2 || x.dim(1) != w.in_channels()) {
    throw DimensionError("deform_conv1d: input " + ShapeToString(x.shape()) +
                         " vs " + std::to_string(w.in_channels()) +
                         " input channels");
  }
}

// Interpolated samples col[p, ci, k].
template <typename Real>
Tensor<Real> SampleColumns(const Tensor<Real> &x, const DeformWeights<Real> &w,
                           const Tensor<Real> &offsets) {
  const std::size_t t = x.dim(0), c_in = w.in_channels(), k = w.k;
  const std::size_t cpo = c_in / w.offset_groups;
  Tensor<Real> col(Shape{t, c_in, k});
  for (std::size_t p = 0; p < t; ++p) {
    for (std::size_t ci = 0; ci < c_in; ++ci) {
      const std::size_t og = ci / cpo;
      for (std::size_t j = 0; j < k; ++j) {
        const Tap tap = MakeTap(
            SamplePosition(p, j, k, static_cast<double>(offsets(p, og, j))));
        const Real a = static_cast<Real>(tap.frac);
        col(p, ci, j) = (Real(1) - a) * Read(x, tap.lo, ci) +
                        a * Read(x, tap.lo + 1, ci);
      }
    }
  }
  return col;
}

}  // namespace

template <typename Real>
void DeformWeights<Real>::Validate() const {
  if (k == 0 || k % 2 == 0) {
    throw ConfigError("deform_conv1d: kernel size must be odd, got " +
                      std::to_string(k));
  }
  if (output_kernel.rank() != 3 || offset_kernel.rank() != 2) {
    throw DimensionError("deform_conv1d: kernel ranks " +
                         ShapeToString(output_kernel.shape()) + ", " +
                         ShapeToString(offset_kernel.shape()));
  }
  const std::size_t c_in = offset_kernel.dim(1), c_out = output_kernel.dim(0);
  if (groups == 0 || offset_groups == 0 || c_in % groups != 0 ||
      c_out % groups != 0 || c_in % offset_groups != 0) {
    throw ConfigError("deform_conv1d: channels " + std::to_string(c_in) +
                      "->" + std::to_string(c_out) +
                      " not divisible by groups " + std::to_string(groups) +
                      " / offset groups " + std::to_string(offset_groups));
  }
  RequireSameShape(output_kernel.shape(), Shape{c_out, c_in / groups, k},
                   "deform output_kernel");
  RequireSameShape(output_bias.shape(), Shape{c_out}, "deform output_bias");
  RequireSameShape(offset_kernel.shape(), Shape{k * offset_groups, c_in},
                   "deform offset_kernel");
  RequireSameShape(offset_bias.shape(), Shape{k * offset_groups},
                   "deform offset_bias");
}

template <typename Real>
DeformWeights<Real> DeformWeights<Real>::Zeros(std::size_t c_in,
                                               std::size_t c_out,
                                               std::size_t k,
                                               std::size_t groups,
                                               std::size_t offset_groups) {
  if (groups == 0 || offset_groups == 0 || c_in % groups != 0 ||
      c_in % offset_groups != 0) {
    throw ConfigError("deform_conv1d: " + std::to_string(c_in) +
                      " input channels not divisible by groups " +
                      std::to_string(groups) + " / offset groups " +
                      std::to_string(offset_groups));
  }
  DeformWeights w;
  w.k = k;
  w.groups = groups;
  w.offset_groups = offset_groups;
  w.output_kernel = Tensor<Real>(Shape{c_out, c_in / groups, k});
  w.output_bias = Tensor<Real>(Shape{c_out});
  w.offset_kernel = Tensor<Real>(Shape{k * offset_groups, c_in});
  w.offset_bias = Tensor<Real>(Shape{k * offset_groups});
  w.Validate();
  return w;
}

template <typename Real>
DeformWeights<Real> DeformWeights<Real>::Random(Rng &rng, std::size_t c_in,
                                                std::size_t c_out,
                                                std::size_t k,
                                                std::size_t groups,
                                                std::size_t offset_groups) {
  DeformWeights w = Zeros(c_in, c_out, k, groups, offset_groups);
  const std::size_t fan_in = (c_in / groups) * k;
  const std::size_t fan_out = (c_out / groups) * k;
  w.output_kernel = XavierUniform<Real>(rng, w.output_kernel.shape(), fan_in,
                                        fan_out);
  return w;
}

template <typename Real>
std::size_t DeformWeights<Real>::ParameterCount(std::size_t c_in,
                                                std::size_t c_out,
                                                std::size_t k,
                                                std::size_t groups,
                                                std::size_t offset_groups) {
  return c_out * (c_in / groups) * k + c_out + k * offset_groups * c_in +
         k * offset_groups;
}

template <typename Real>
Tensor<Real> predict_offsets(const Tensor<Real> &x,
                             const DeformWeights<Real> &w) {
  CheckShapes(x, w);
  const Tensor<Real> flat = linear(x, transpose(w.offset_kernel), w.offset_bias);
  return flat.reshaped(Shape{x.dim(0), w.offset_groups, w.k});
}

template <typename Real>
Tensor<Real> deform_conv1d_forward(const Tensor<Real> &x,
                                   const DeformWeights<Real> &w,
                                   const Tensor<Real> &offsets) {
  CheckShapes(x, w);
  const std::size_t t = x.dim(0), c_in = w.in_channels(),
                    c_out = w.out_channels(), k = w.k;
  RequireSameShape(offsets.shape(), Shape{t, w.offset_groups, k},
                   "deform_conv1d offsets");
  const std::size_t cpg = c_in / w.groups, opg = c_out / w.groups;
  const std::size_t row = cpg * k;
  const Tensor<Real> col = SampleColumns(x, w, offsets);

  Tensor<Real> y(Shape{t, c_out});
  for (std::size_t p = 0; p < t; ++p)
    for (std::size_t co = 0; co < c_out; ++co) y(p, co) = w.output_bias[co];
  for (std::size_t g = 0; g < w.groups; ++g) {
    // Group kernel transposed to [cpg * K, opg].
    std::vector<Real> wt(row * opg);
    for (std::size_t o = 0; o < opg; ++o)
      for (std::size_t r = 0; r < row; ++r)
        wt[r * opg + o] = w.output_kernel[(g * opg + o) * row + r];
    GemmAccumulate(col.data() + g * row, c_in * k, wt.data(), opg,
                   y.data() + g * opg, c_out, t, row, opg);
  }
  return y;
}

template <typename Real>
DeformGrads<Real> deform_conv1d_backward(const Tensor<Real> &x,
                                         const DeformWeights<Real> &w,
                                         const Tensor<Real> &upstream) {
  CheckShapes(x, w);
  const std::size_t t = x.dim(0), c_in = w.in_channels(),
                    c_out = w.out_channels(), k = w.k;
  RequireSameShape(upstream.shape(), Shape{t, c_out},
                   "deform_conv1d_backward upstream");
  const std::size_t cpg = c_in / w.groups, opg = c_out / w.groups;
  const std::size_t cpo = c_in / w.offset_groups;
  const std::size_t row = cpg * k;

  const Tensor<Real> offsets = predict_offsets(x, w);
  const Tensor<Real> col = SampleColumns(x, w, offsets);

  DeformGrads<Real> g{Tensor<Real>(x.shape()),
                      DeformWeights<Real>::Zeros(c_in, c_out, k, w.groups,
                                                 w.offset_groups)};
  for (std::size_t p = 0; p < t; ++p)
    for (std::size_t co = 0; co < c_out; ++co)
      g.w.output_bias[co] += upstream(p, co);

  // d col = dy_g * W_g; d W_g = dy_g^T * col_g.
  Tensor<Real> d_col(Shape{t, c_in, k});
  for (std::size_t grp = 0; grp < w.groups; ++grp) {
    GemmAccumulate(upstream.data() + grp * opg, c_out,
                   w.output_kernel.data() + grp * opg * row, row,
                   d_col.data() + grp * row, c_in * k, t, opg, row);
    for (std::size_t p = 0; p < t; ++p) {
      const Real *c = col.data() + p * c_in * k + grp * row;
      for (std::size_t o = 0; o < opg; ++o) {
        const Real up = upstream(p, grp * opg + o);
        Real *dw = g.w.output_kernel.data() + (grp * opg + o) * row;
        for (std::size_t r = 0; r < row; ++r) dw[r] += up * c[r];
      }
    }
  }

  // Scatter through the interpolation: value = (1-a) x[lo] + a x[lo+1],
  // d value / d s = x[lo+1] - x[lo].
  Tensor<Real> d_offsets(offsets.shape());
  for (std::size_t p = 0; p < t; ++p) {
    for (std::size_t ci = 0; ci < c_in; ++ci) {
      const std::size_t og = ci / cpo;
      for (std::size_t j = 0; j < k; ++j) {
        const Real dv = d_col(p, ci, j);
        const Tap tap = MakeTap(
            SamplePosition(p, j, k, static_cast<double>(offsets(p, og, j))));
        const Real a = static_cast<Real>(tap.frac);
        const auto tt = static_cast<std::ptrdiff_t>(t);
        if (tap.lo >= 0 && tap.lo < tt)
          g.x(static_cast<std::size_t>(tap.lo), ci) += (Real(1) - a) * dv;
        if (tap.lo + 1 >= 0 && tap.lo + 1 < tt)
          g.x(static_cast<std::size_t>(tap.lo + 1), ci) += a * dv;
        d_offsets(p, og, j) +=
            dv * (Read(x, tap.lo + 1, ci) - Read(x, tap.lo, ci));
      }
    }
  }

  // Offsets = x * offset_kernel^T + offset_bias.
  const Tensor<Real> d_off = d_offsets.reshaped(Shape{t, w.offset_groups * k});
  g.w.offset_kernel = matmul_tn(d_off, x);
  for (std::size_t p = 0; p < t; ++p)
    for (std::size_t r = 0; r < d_off.dim(1); ++r)
      g.w.offset_bias[r] += d_off(p, r);
  AddInPlace(g.x, matmul(d_off, w.offset_kernel));
  return g;
}

template <typename Real>
DeformModuleWeights<Real> DeformModuleWeights<Real>::Random(
    Rng &rng, std::size_t d, std::size_t k, std::size_t groups) {
  DeformModuleWeights m;
  m.conv = DeformWeights<Real>::Random(rng, d, d, k, groups, groups);
  m.norm_gamma = Tensor<Real>(Shape{d}, Real(1));
  m.norm_beta = Tensor<Real>(Shape{d});
  return m;
}

template <typename Real>
std::size_t DeformModuleWeights<Real>::ParameterCount(std::size_t d,
                                                      std::size_t k,
                                                      std::size_t groups) {
  return DeformWeights<Real>::ParameterCount(d, d, k, groups, groups) + 2 * d;
}

template <typename Real>
Tensor<Real> deform_module_forward(const Tensor<Real> &x,
                                   const DeformModuleWeights<Real> &w) {
  if (w.conv.in_channels() != w.conv.out_channels()) {
    throw DimensionError("deform module needs C_in == C_out, got " +
                         std::to_string(w.conv.in_channels()) + " and " +
                         std::to_string(w.conv.out_channels()));
  }
  Tensor<Real> y = layer_norm(
      deform_conv1d_forward(x, w.conv, predict_offsets(x, w.conv)),
      w.norm_gamma, w.norm_beta);
  SwishInPlace(y);
  return y;
}

#define SFL_INSTANTIATE_DEFORM(Real)                                          \
  template struct DeformWeights<Real>;                                        \
  template struct DeformModuleWeights<Real>;                                  \
  template Tensor<Real> predict_offsets(const Tensor<Real> &,                 \
                                        const DeformWeights<Real> &);         \
  template Tensor<Real> deform_conv1d_forward(                                \
      const Tensor<Real> &, const DeformWeights<Real> &, const Tensor<Real> &); \
  template DeformGrads<Real> deform_conv1d_backward(                          \
      const Tensor<Real> &, const DeformWeights<Real> &, const Tensor<Real> &); \
  template Tensor<Real> deform_module_forward(                                \
      const Tensor<Real> &, const DeformModuleWeights<Real> &);

SFL_INSTANTIATE_DEFORM(float)
SFL_INSTANTIATE_DEFORM(double)

#undef SFL_INSTANTIATE_DEFORM

}  // namespace sfl
