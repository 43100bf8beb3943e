// src/numerics/tensor.cc

#include "sfl/numerics/tensor.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>

namespace sfl {

std::string ShapeToString(const Shape &shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t ShapeNumel(const Shape &shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

void RequireSameShape(const Shape &a, const Shape &b, const char *what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": shape " + ShapeToString(a) +
                         " vs " + ShapeToString(b));
  }
}

void RequireRank(const Shape &s, std::size_t rank, const char *what) {
  if (s.size() != rank) {
    throw DimensionError(std::string(what) + ": expected rank " +
                         std::to_string(rank) + ", got shape " +
                         ShapeToString(s));
  }
}

template <typename Real>
Tensor<Real> Tensor<Real>::Matrix(
    std::initializer_list<std::initializer_list<Real>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<Real> data;
  data.reserve(r * c);
  for (const auto &row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor(Shape{r, c}, std::move(data));
}

template <typename Real>
Tensor<Real> Tensor<Real>::Vector(std::initializer_list<Real> values) {
  return Tensor(Shape{values.size()}, std::vector<Real>(values));
}

template <typename Real>
Tensor<Real> Tensor<Real>::reshaped(Shape shape) const {
  if (ShapeNumel(shape) != data_.size()) {
    throw DimensionError("cannot reshape " + ShapeToString(shape_) + " to " +
                         ShapeToString(shape));
  }
  return Tensor(std::move(shape), data_);
}

template <typename Real>
Tensor<Real> Tensor<Real>::slice_rows(std::size_t begin, std::size_t end) const {
  if (shape_.empty() || begin > end || end > shape_[0]) {
    throw DimensionError("row slice [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") out of range for " +
                         ShapeToString(shape_));
  }
  const std::size_t w = shape_[0] ? data_.size() / shape_[0] : 0;
  Shape s = shape_;
  s[0] = end - begin;
  return Tensor(std::move(s),
                std::vector<Real>(data_.begin() + begin * w,
                                  data_.begin() + end * w));
}

template <typename Real>
bool Tensor<Real>::all_finite() const {
  if constexpr (std::is_floating_point_v<Real>) {
    return std::all_of(data_.begin(), data_.end(),
                       [](Real v) { return std::isfinite(v); });
  } else {
    return true;
  }
}

template <typename Real>
Tensor<Real> ConcatRows(std::span<const Tensor<Real>> parts) {
  if (parts.empty()) return {};
  Shape s = parts[0].shape();
  std::size_t rows = 0;
  for (const auto &p : parts) {
    if (p.rank() != s.size()) {
      throw DimensionError("ConcatRows: rank mismatch " +
                           ShapeToString(p.shape()) + " vs " +
                           ShapeToString(s));
    }
    for (std::size_t i = 1; i < s.size(); ++i) {
      if (p.dim(i) != s[i]) {
        throw DimensionError("ConcatRows: shape " + ShapeToString(p.shape()) +
                             " vs " + ShapeToString(s));
      }
    }
    rows += p.dim(0);
  }
  s[0] = rows;
  std::vector<Real> data;
  data.reserve(ShapeNumel(s));
  for (const auto &p : parts) {
    data.insert(data.end(), p.storage().begin(), p.storage().end());
  }
  return Tensor<Real>(std::move(s), std::move(data));
}

template <typename Real>
double MaxRelativeDifference(const Tensor<Real> &a, const Tensor<Real> &b,
                             double floor) {
  RequireSameShape(a.shape(), b.shape(), "MaxRelativeDifference");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i], y = b[i];
    const double denom = std::max({std::abs(y), floor});
    worst = std::max(worst, std::abs(x - y) / denom);
  }
  return worst;
}

template <typename Real>
double NormRelativeError(const Tensor<Real> &a, const Tensor<Real> &b) {
  RequireSameShape(a.shape(), b.shape(), "NormRelativeError");
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i], y = b[i];
    diff += (x - y) * (x - y);
    na += x * x;
    nb += y * y;
  }
  const double denom = std::max({std::sqrt(na), std::sqrt(nb), 1e-300});
  return std::sqrt(diff) / denom;
}

double Norm2(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

template class Tensor<float>;
template class Tensor<double>;
template class Tensor<std::uint8_t>;
template Tensor<float> ConcatRows(std::span<const Tensor<float>>);
template Tensor<double> ConcatRows(std::span<const Tensor<double>>);
template double MaxRelativeDifference(const Tensor<float> &,
                                      const Tensor<float> &, double);
template double MaxRelativeDifference(const Tensor<double> &,
                                      const Tensor<double> &, double);
template double NormRelativeError(const Tensor<float> &, const Tensor<float> &);
template double NormRelativeError(const Tensor<double> &,
                                  const Tensor<double> &);

}  // namespace sfl
