// include/sfl/numerics/finite_diff.h

#pragma once

#include <functional>
#include <string>

#include "sfl/numerics/tensor.h"

namespace sfl {

inline constexpr double kFiniteDiffStep = 1e-5;

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every
// coordinate. Throws Error if f is not finite at a probe point.
Tensor<double> finite_diff_grad(
    const std::function<double(const Tensor<double> &)> &f,
    const Tensor<double> &x, double step = kFiniteDiffStep);

// Numerical gradient with respect to a tensor owned elsewhere (a weight
// inside a struct). loss() is evaluated with the tensor perturbed in place
// and the tensor is restored afterwards.
Tensor<double> finite_diff_inplace(const std::function<double()> &loss,
                                   Tensor<double> &param,
                                   double step = kFiniteDiffStep);

}  // namespace sfl
