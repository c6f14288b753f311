// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "poolab/ndarray.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "poolab/errors.h"

namespace poolab {

std::size_t ShapeSize(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string ShapeToString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

NdArray::NdArray(Shape shape, double fill)
    : shape_(std::move(shape)), data_(ShapeSize(shape_), fill) {}

NdArray::NdArray(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (ShapeSize(shape_) != data_.size()) {
    throw DimensionError("NdArray: shape " + ShapeToString(shape_) +
                         " does not match " + std::to_string(data_.size()) +
                         " values");
  }
}

NdArray NdArray::FromRows(
    std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t n = rows.size();
  const std::size_t m = n ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(n * m);
  for (const auto& r : rows) {
    if (r.size() != m) throw DimensionError("FromRows: ragged rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return NdArray({n, m}, std::move(data));
}

std::span<double> NdArray::row(std::size_t i) {
  const std::size_t w = shape_.back();
  return std::span<double>(data_).subspan(i * w, w);
}

std::span<const double> NdArray::row(std::size_t i) const {
  const std::size_t w = shape_.back();
  return std::span<const double>(data_).subspan(i * w, w);
}

NdArray NdArray::Reshaped(Shape shape) const {
  if (ShapeSize(shape) != data_.size()) {
    throw DimensionError("reshape " + ShapeToString(shape_) + " -> " +
                         ShapeToString(shape));
  }
  return NdArray(std::move(shape), data_);
}

void NdArray::Fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool NdArray::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

namespace kernels {

void Gemm(const double* a, const double* b, double* c, std::size_t m,
          std::size_t k, std::size_t p, bool accumulate) {
  if (!accumulate) std::fill(c, c + m * p, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * p;
    const double* arow = a + i * k;
    for (std::size_t t = 0; t < k; ++t) {
      const double av = arow[t];
      const double* brow = b + t * p;
      for (std::size_t j = 0; j < p; ++j) crow[j] += av * brow[j];
    }
  }
}

void GemmTransB(const double* a, const double* b, double* c, std::size_t m,
                std::size_t k, std::size_t p, bool accumulate) {
  std::vector<double> bt(k * p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t t = 0; t < k; ++t) bt[t * p + j] = b[j * k + t];
  Gemm(a, bt.data(), c, m, k, p, accumulate);
}

void GemmTransA(const double* a, const double* b, double* c, std::size_t m,
                std::size_t k, std::size_t p, bool accumulate) {
  if (!accumulate) std::fill(c, c + k * p, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    const double* arow = a + r * k;
    const double* brow = b + r * p;
    for (std::size_t i = 0; i < k; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = c + i * p;
      for (std::size_t j = 0; j < p; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace kernels

NdArray MatMul(const NdArray& a, const NdArray& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: cannot multiply " + ShapeToString(a.shape()) +
                         " by " + ShapeToString(b.shape()));
  }
  NdArray c({a.dim(0), b.dim(1)});
  kernels::Gemm(a.raw(), b.raw(), c.raw(), a.dim(0), a.dim(1), b.dim(1), false);
  return c;
}

NdArray Transpose(const NdArray& a) {
  if (a.rank() != 2) {
    throw DimensionError("transpose expects 2-D, got " + ShapeToString(a.shape()));
  }
  NdArray t({a.dim(1), a.dim(0)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < a.dim(1); ++j) t.at(j, i) = a.at(i, j);
  return t;
}

NdArray Softmax(const NdArray& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw DimensionError("softmax: axis " + std::to_string(axis) +
                         " out of range for " + ShapeToString(x.shape()));
  }
  const Shape& s = x.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t len = s[axis];
  NdArray y(s);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      double mx = -INFINITY;
      for (std::size_t t = 0; t < len; ++t) mx = std::max(mx, x[base + t * inner]);
      double z = 0.0;
      for (std::size_t t = 0; t < len; ++t) {
        const double e = std::exp(x[base + t * inner] - mx);
        y[base + t * inner] = e;
        z += e;
      }
      for (std::size_t t = 0; t < len; ++t) y[base + t * inner] /= z;
    }
  }
  return y;
}

double MaxAbsDiff(const NdArray& a, const NdArray& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("MaxAbsDiff: " + ShapeToString(a.shape()) + " vs " +
                         ShapeToString(b.shape()));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace poolab
