// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

// Reverse-mode automatic differentiation over NdArray values.
//
// A Var is a handle to a node of a dynamically built computation graph. Ops
// record their operands and a local derivative rule only when at least one
// operand requires a gradient. Graphs are single-owner; parameters (leaf Vars
// with requires_grad) may be read concurrently by independent graphs built
// under NoGradGuard.

#ifndef POOLAB_AUTODIFF_H_
#define POOLAB_AUTODIFF_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "poolab/ndarray.h"

namespace poolab {

namespace detail {

struct Node {
  NdArray value;
  NdArray grad;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  NdArray& EnsureGrad();
};

}  // namespace detail

class Var;
namespace detail {
Var WrapNode(std::shared_ptr<Node> node);
}  // namespace detail

class Var {
 public:
  Var() = default;
  explicit Var(NdArray value, bool requires_grad = false);

  static Var Constant(NdArray value) { return Var(std::move(value), false); }
  static Var Parameter(NdArray value) { return Var(std::move(value), true); }

  bool defined() const { return node_ != nullptr; }
  const NdArray& value() const { return node_->value; }
  // Mutable access for optimizers; never call while a graph using it is live.
  NdArray& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_->requires_grad; }

  // Gradient accumulated by Backward(); zeros of value's shape if untouched.
  const NdArray& grad() const;
  bool has_grad() const { return !node_->grad.empty(); }
  void ZeroGrad();

  // Propagates d(this)/d(node) into every reachable node that requires a
  // gradient. `this` must hold exactly one element.
  void Backward() const;

  const char* op() const { return node_->op; }
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  friend Var detail::WrapNode(std::shared_ptr<detail::Node> node);
  explicit Var(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  std::shared_ptr<detail::Node> node_;
};

// While alive, ops on this thread build no graph.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool GradEnabled();

namespace ops {

Var MatMul(const Var& a, const Var& b);
// [g x m x k] . [g x k x p] -> [g x m x p]; with trans_b, b is [g x p x k].
Var BatchedMatMul(const Var& a, const Var& b, bool trans_b = false);

Var Add(const Var& a, const Var& b);
Var Sub(const Var& a, const Var& b);
Var Mul(const Var& a, const Var& b);
Var Scale(const Var& a, double s);
// a + c for a constant array of a's shape.
Var AddConstant(const Var& a, const NdArray& c);
// x[..., d] + bias[d], broadcast over all leading axes.
Var AddBias(const Var& x, const Var& bias);

Var Sum(const Var& a);
Var Mean(const Var& a, std::size_t axis);
// Mean of row blocks: x is [b*n x d]; output row i averages rows
// i*n .. i*n+valid[i]-1.
Var SegmentMean(const Var& x, std::size_t n, std::span<const std::size_t> valid);

Var LayerNorm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
Var Gelu(const Var& x);
Var Log(const Var& x);
Var Exp(const Var& x);

Var Transpose(const Var& a);
Var Reshape(const Var& a, Shape shape);
Var Permute(const Var& a, std::span<const std::size_t> axes);
// Rows of a 2-D table selected by index.
Var GatherRows(const Var& table, std::span<const std::size_t> rows);
// x[i, idx[i]] for a 2-D x.
Var Pick(const Var& x, std::span<const std::size_t> idx);
// Stacks equally shaped operands along a new axis inserted at `axis`.
Var Stack(std::span<const Var> parts, std::size_t axis);
// Repeats x along a new leading axis of length g.
Var TileLeading(const Var& x, std::size_t g);

Var Softmax(const Var& x, std::size_t axis);
// Softmax over the last axis restricted to entries with keep != 0. Masked
// entries get probability exactly 0. Every row must keep at least one entry.
Var MaskedSoftmax(const Var& x, std::span<const std::uint8_t> keep);
Var LogSoftmax(const Var& x);
Var L2NormalizeRows(const Var& x);

}  // namespace ops

}  // namespace poolab

#endif  // POOLAB_AUTODIFF_H_
