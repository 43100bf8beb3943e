// src/numerics/finite_diff.cc

#include "sfl/numerics/finite_diff.h"

#include <cmath>

namespace sfl {
namespace {

double Probe(const std::function<double()> &loss, std::size_t i) {
  const double v = loss();
  if (!std::isfinite(v)) {
    throw Error("finite_diff: non-finite function value at coordinate " +
                std::to_string(i));
  }
  return v;
}

}  // namespace

Tensor<double> finite_diff_inplace(const std::function<double()> &loss,
                                   Tensor<double> &param, double step) {
  Tensor<double> grad(param.shape());
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double saved = param[i];
    param[i] = saved + step;
    const double plus = Probe(loss, i);
    param[i] = saved - step;
    const double minus = Probe(loss, i);
    param[i] = saved;
    grad[i] = (plus - minus) / (2.0 * step);
  }
  return grad;
}

Tensor<double> finite_diff_grad(
    const std::function<double(const Tensor<double> &)> &f,
    const Tensor<double> &x, double step) {
  Tensor<double> probe = x;
  return finite_diff_inplace([&] { return f(probe); }, probe, step);
}

}  // namespace sfl
