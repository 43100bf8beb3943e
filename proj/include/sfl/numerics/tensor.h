// include/sfl/numerics/tensor.h
//
// Dense row-major tensor used for every activation and weight in the
// library. Real is float (benchmarks) or double (gradient checks).

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "sfl/numerics/errors.h"

namespace sfl {

using Shape = std::vector<std::size_t>;

std::string ShapeToString(const Shape &shape);
std::size_t ShapeNumel(const Shape &shape);

template <typename Real>
class Tensor {
 public:
  using value_type = Real;

  Tensor() = default;
  explicit Tensor(Shape shape, Real fill = Real(0))
      : shape_(std::move(shape)), data_(ShapeNumel(shape_), fill) {}
  Tensor(Shape shape, std::vector<Real> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (ShapeNumel(shape_) != data_.size()) {
      throw DimensionError("tensor data length " +
                           std::to_string(data_.size()) +
                           " does not match shape " + ShapeToString(shape_));
    }
  }

  // 2-D literal, e.g. Tensor<double>::Matrix({{1, 2}, {3, 4}}).
  static Tensor Matrix(std::initializer_list<std::initializer_list<Real>> rows);
  static Tensor Vector(std::initializer_list<Real> values);

  const Shape &shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Real *data() { return data_.data(); }
  const Real *data() const { return data_.data(); }
  std::span<Real> values() { return data_; }
  std::span<const Real> values() const { return data_; }
  std::vector<Real> &storage() { return data_; }
  const std::vector<Real> &storage() const { return data_; }

  Real &operator[](std::size_t i) { return data_[i]; }
  const Real &operator[](std::size_t i) const { return data_[i]; }

  Real &operator()(std::size_t i, std::size_t j) {
    return data_[i * shape_[1] + j];
  }
  const Real &operator()(std::size_t i, std::size_t j) const {
    return data_[i * shape_[1] + j];
  }
  Real &operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  const Real &operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  // Row i of a tensor viewed as [dim(0), numel / dim(0)].
  std::span<Real> row(std::size_t i) {
    const std::size_t w = data_.size() / shape_[0];
    return {data_.data() + i * w, w};
  }
  std::span<const Real> row(std::size_t i) const {
    const std::size_t w = data_.size() / shape_[0];
    return {data_.data() + i * w, w};
  }

  // Same data, new shape with equal element count.
  Tensor reshaped(Shape shape) const;

  // Rows [begin, end) along the leading dimension.
  Tensor slice_rows(std::size_t begin, std::size_t end) const;

  template <typename Other>
  Tensor<Other> cast() const {
    std::vector<Other> out(data_.begin(), data_.end());
    return Tensor<Other>(shape_, std::move(out));
  }

  bool all_finite() const;

  friend bool operator==(const Tensor &a, const Tensor &b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<Real> data_;
};

// Throws DimensionError naming both shapes when they differ.
void RequireSameShape(const Shape &a, const Shape &b, const char *what);
void RequireRank(const Shape &s, std::size_t rank, const char *what);

// Concatenate rank-2 tensors along rows.
template <typename Real>
Tensor<Real> ConcatRows(std::span<const Tensor<Real>> parts);

// max |a-b| / max(|b|, floor); used by tests and the equivalence checks.
template <typename Real>
double MaxRelativeDifference(const Tensor<Real> &a, const Tensor<Real> &b,
                             double floor = 1.0);

// ||a-b||_2 / max(||a||_2, ||b||_2, tiny).
template <typename Real>
double NormRelativeError(const Tensor<Real> &a, const Tensor<Real> &b);

double Norm2(std::span<const double> v);

}  // namespace sfl
