// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef POOLAB_NDARRAY_H_
#define POOLAB_NDARRAY_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace poolab {

using Shape = std::vector<std::size_t>;

std::size_t ShapeSize(const Shape& shape);
std::string ShapeToString(const Shape& shape);

// Dense row-major array of doubles.
class NdArray {
 public:
  NdArray() = default;
  explicit NdArray(Shape shape, double fill = 0.0);
  NdArray(Shape shape, std::vector<double> data);

  static NdArray Scalar(double value) { return NdArray({1}, {value}); }
  // 2-D array from nested rows; all rows must have equal length.
  static NdArray FromRows(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double* raw() { return data_.data(); }
  const double* raw() const { return data_.data(); }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // 2-D element access.
  double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

  std::span<double> row(std::size_t i);
  std::span<const double> row(std::size_t i) const;

  // Same data viewed with a new shape of equal total size.
  NdArray Reshaped(Shape shape) const;

  void Fill(double value);
  bool AllFinite() const;

  friend bool operator==(const NdArray& a, const NdArray& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

// C = A.B for 2-D operands. Accumulates over the inner axis in index order.
NdArray MatMul(const NdArray& a, const NdArray& b);
NdArray Transpose(const NdArray& a);
// Numerically stable softmax along `axis`.
NdArray Softmax(const NdArray& x, std::size_t axis);
double MaxAbsDiff(const NdArray& a, const NdArray& b);

namespace kernels {

// c[m x p] (+)= a[m x k] . b[k x p], all row-major and contiguous.
void Gemm(const double* a, const double* b, double* c, std::size_t m,
          std::size_t k, std::size_t p, bool accumulate);
// c[m x p] (+)= a[m x k] . b[p x k]^T
void GemmTransB(const double* a, const double* b, double* c, std::size_t m,
                std::size_t k, std::size_t p, bool accumulate);
// c[k x p] (+)= a[m x k]^T . b[m x p]
void GemmTransA(const double* a, const double* b, double* c, std::size_t m,
                std::size_t k, std::size_t p, bool accumulate);

}  // namespace kernels

}  // namespace poolab

#endif  // POOLAB_NDARRAY_H_
