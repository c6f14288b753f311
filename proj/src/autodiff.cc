// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "poolab/autodiff.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <unordered_set>
#include <utility>

#include "poolab/errors.h"

namespace poolab {

namespace {

thread_local bool g_grad_enabled = true;

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

void CheckFinite(const NdArray& v, const char* op) {
  if (!v.AllFinite()) {
    throw NumericError(std::string("non-finite value produced by ") + op);
  }
}

// Builds the result node. The graph edge is recorded only when a parent
// requires a gradient and grad mode is on.
Var Make(const char* op, NdArray value, std::vector<NodePtr> parents,
         std::function<void(Node&)> backward) {
  CheckFinite(value, op);
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = op;
  const bool needs = g_grad_enabled &&
                     std::any_of(parents.begin(), parents.end(),
                                 [](const NodePtr& p) { return p->requires_grad; });
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return detail::WrapNode(std::move(node));
}

void RequireSameShape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         ShapeToString(a.shape()) + " vs " +
                         ShapeToString(b.shape()));
  }
}

// Parent grad buffer if it participates in backward, else nullptr.
double* GradOf(Node& self, std::size_t i) {
  Node& p = *self.parents[i];
  return p.requires_grad ? p.EnsureGrad().raw() : nullptr;
}

struct AxisSplit {
  std::size_t outer = 1, len = 1, inner = 1;
};

AxisSplit SplitAt(const Shape& s, std::size_t axis) {
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.len = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

}  // namespace

namespace detail {

NdArray& Node::EnsureGrad() {
  if (grad.empty() && !value.empty()) grad = NdArray(value.shape());
  return grad;
}

Var WrapNode(std::shared_ptr<Node> node) { return Var(std::move(node)); }

}  // namespace detail

Var::Var(NdArray value, bool requires_grad)
    : node_(std::make_shared<detail::Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

const NdArray& Var::grad() const { return node_->EnsureGrad(); }

void Var::ZeroGrad() {
  if (!node_->grad.empty()) node_->grad.Fill(0.0);
}

void Var::Backward() const {
  if (node_->value.size() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " +
                        ShapeToString(node_->value.shape()));
  }
  if (!node_->requires_grad) return;

  // Post-order DFS gives a topological order; each node is visited once.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  node_->EnsureGrad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool GradEnabled() { return g_grad_enabled; }

namespace ops {

Var MatMul(const Var& a, const Var& b) {
  const NdArray& av = a.value();
  const NdArray& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
    throw DimensionError("matmul: cannot multiply " + ShapeToString(av.shape()) +
                         " by " + ShapeToString(bv.shape()));
  }
  const std::size_t m = av.dim(0), k = av.dim(1), p = bv.dim(1);
  NdArray out({m, p});
  kernels::Gemm(av.raw(), bv.raw(), out.raw(), m, k, p, false);
  return Make("matmul", std::move(out), {a.node(), b.node()},
              [m, k, p](Node& self) {
                const double* g = self.grad.raw();
                const double* aval = self.parents[0]->value.raw();
                const double* bval = self.parents[1]->value.raw();
                if (double* da = GradOf(self, 0))
                  kernels::GemmTransB(g, bval, da, m, p, k, true);
                if (double* db = GradOf(self, 1))
                  kernels::GemmTransA(aval, g, db, m, k, p, true);
              });
}

Var BatchedMatMul(const Var& a, const Var& b, bool trans_b) {
  const NdArray& av = a.value();
  const NdArray& bv = b.value();
  const bool ok = av.rank() == 3 && bv.rank() == 3 && av.dim(0) == bv.dim(0) &&
                  av.dim(2) == (trans_b ? bv.dim(2) : bv.dim(1));
  if (!ok) {
    throw DimensionError(std::string("batched matmul") +
                         (trans_b ? " (b transposed)" : "") + ": cannot multiply " +
                         ShapeToString(av.shape()) + " by " +
                         ShapeToString(bv.shape()));
  }
  const std::size_t g = av.dim(0), m = av.dim(1), k = av.dim(2);
  const std::size_t p = trans_b ? bv.dim(1) : bv.dim(2);
  NdArray out({g, m, p});
  for (std::size_t i = 0; i < g; ++i) {
    const double* ai = av.raw() + i * m * k;
    const double* bi = bv.raw() + i * k * p;
    double* oi = out.raw() + i * m * p;
    if (trans_b)
      kernels::GemmTransB(ai, bi, oi, m, k, p, false);
    else
      kernels::Gemm(ai, bi, oi, m, k, p, false);
  }
  return Make("batched_matmul", std::move(out), {a.node(), b.node()},
              [g, m, k, p, trans_b](Node& self) {
                const double* gr = self.grad.raw();
                const double* aval = self.parents[0]->value.raw();
                const double* bval = self.parents[1]->value.raw();
                double* da = GradOf(self, 0);
                double* db = GradOf(self, 1);
                for (std::size_t i = 0; i < g; ++i) {
                  const double* gi = gr + i * m * p;
                  const double* ai = aval + i * m * k;
                  const double* bi = bval + i * k * p;
                  if (trans_b) {
                    // out = a . b^T, b is [p x k]
                    if (da) kernels::Gemm(gi, bi, da + i * m * k, m, p, k, true);
                    if (db) kernels::GemmTransA(gi, ai, db + i * p * k, m, p, k, true);
                  } else {
                    if (da) kernels::GemmTransB(gi, bi, da + i * m * k, m, p, k, true);
                    if (db) kernels::GemmTransA(ai, gi, db + i * k * p, m, k, p, true);
                  }
                }
              });
}

Var Add(const Var& a, const Var& b) {
  RequireSameShape(a, b, "add");
  NdArray out = a.value();
  const double* bv = b.value().raw();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return Make("add", std::move(out), {a.node(), b.node()}, [](Node& self) {
    const std::size_t n = self.grad.size();
    const double* g = self.grad.raw();
    for (std::size_t pi = 0; pi < 2; ++pi) {
      if (double* d = GradOf(self, pi))
        for (std::size_t i = 0; i < n; ++i) d[i] += g[i];
    }
  });
}

Var Sub(const Var& a, const Var& b) {
  RequireSameShape(a, b, "sub");
  NdArray out = a.value();
  const double* bv = b.value().raw();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return Make("sub", std::move(out), {a.node(), b.node()}, [](Node& self) {
    const std::size_t n = self.grad.size();
    const double* g = self.grad.raw();
    if (double* d = GradOf(self, 0))
      for (std::size_t i = 0; i < n; ++i) d[i] += g[i];
    if (double* d = GradOf(self, 1))
      for (std::size_t i = 0; i < n; ++i) d[i] -= g[i];
  });
}

Var Mul(const Var& a, const Var& b) {
  RequireSameShape(a, b, "mul");
  NdArray out = a.value();
  const double* bv = b.value().raw();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return Make("mul", std::move(out), {a.node(), b.node()}, [](Node& self) {
    const std::size_t n = self.grad.size();
    const double* g = self.grad.raw();
    const double* av = self.parents[0]->value.raw();
    const double* bv = self.parents[1]->value.raw();
    if (double* d = GradOf(self, 0))
      for (std::size_t i = 0; i < n; ++i) d[i] += g[i] * bv[i];
    if (double* d = GradOf(self, 1))
      for (std::size_t i = 0; i < n; ++i) d[i] += g[i] * av[i];
  });
}

Var Scale(const Var& a, double s) {
  NdArray out = a.value();
  for (double& v : out.data()) v *= s;
  return Make("scale", std::move(out), {a.node()}, [s](Node& self) {
    const std::size_t n = self.grad.size();
    const double* g = self.grad.raw();
    if (double* d = GradOf(self, 0))
      for (std::size_t i = 0; i < n; ++i) d[i] += s * g[i];
  });
}

Var AddConstant(const Var& a, const NdArray& c) {
  if (a.shape() != c.shape()) {
    throw DimensionError("add_constant: shape mismatch " +
                         ShapeToString(a.shape()) + " vs " +
                         ShapeToString(c.shape()));
  }
  NdArray out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += c[i];
  return Make("add_constant", std::move(out), {a.node()}, [](Node& self) {
    const std::size_t n = self.grad.size();
    const double* g = self.grad.raw();
    if (double* d = GradOf(self, 0))
      for (std::size_t i = 0; i < n; ++i) d[i] += g[i];
  });
}

Var AddBias(const Var& x, const Var& bias) {
  const NdArray& xv = x.value();
  const NdArray& bv = bias.value();
  if (xv.rank() == 0 || bv.rank() != 1 || bv.dim(0) != xv.shape().back()) {
    throw DimensionError("add_bias: cannot broadcast " + ShapeToString(bv.shape()) +
                         " over " + ShapeToString(xv.shape()));
  }
  const std::size_t d = bv.dim(0);
  const std::size_t rows = xv.size() / d;
  NdArray out = xv;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] += bv[j];
  return Make("add_bias", std::move(out), {x.node(), bias.node()},
              [rows, d](Node& self) {
                const double* g = self.grad.raw();
                if (double* dx = GradOf(self, 0))
                  for (std::size_t i = 0; i < rows * d; ++i) dx[i] += g[i];
                if (double* db = GradOf(self, 1))
                  for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t j = 0; j < d; ++j) db[j] += g[r * d + j];
              });
}

Var Sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return Make("sum", NdArray::Scalar(s), {a.node()}, [](Node& self) {
    const double g = self.grad[0];
    if (double* d = GradOf(self, 0)) {
      const std::size_t n = self.parents[0]->value.size();
      for (std::size_t i = 0; i < n; ++i) d[i] += g;
    }
  });
}

Var Mean(const Var& a, std::size_t axis) {
  const NdArray& av = a.value();
  if (axis >= av.rank()) {
    throw DimensionError("mean: axis " + std::to_string(axis) + " out of range for " +
                         ShapeToString(av.shape()));
  }
  const AxisSplit s = SplitAt(av.shape(), axis);
  Shape out_shape;
  for (std::size_t i = 0; i < av.rank(); ++i)
    if (i != axis) out_shape.push_back(av.dim(i));
  if (out_shape.empty()) out_shape = {1};
  NdArray out(out_shape);
  const double inv = 1.0 / static_cast<double>(s.len);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t t = 0; t < s.len; ++t)
      for (std::size_t i = 0; i < s.inner; ++i)
        out[o * s.inner + i] += av[(o * s.len + t) * s.inner + i];
  for (double& v : out.data()) v /= static_cast<double>(s.len);
  return Make("mean", std::move(out), {a.node()}, [s, inv](Node& self) {
    const double* g = self.grad.raw();
    if (double* d = GradOf(self, 0))
      for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t t = 0; t < s.len; ++t)
          for (std::size_t i = 0; i < s.inner; ++i)
            d[(o * s.len + t) * s.inner + i] += g[o * s.inner + i] * inv;
  });
}

Var SegmentMean(const Var& x, std::size_t n, std::span<const std::size_t> valid) {
  const NdArray& xv = x.value();
  const std::size_t b = valid.size();
  if (xv.rank() != 2 || xv.dim(0) != b * n) {
    throw DimensionError("segment_mean: expected [" + std::to_string(b * n) +
                         " x d], got " + ShapeToString(xv.shape()));
  }
  const std::size_t d = xv.dim(1);
  std::vector<std::size_t> lens(valid.begin(), valid.end());
  for (std::size_t len : lens) {
    if (len == 0 || len > n) throw ContractError("segment_mean: invalid segment length");
  }
  NdArray out({b, d});
  for (std::size_t i = 0; i < b; ++i) {
    double* orow = out.raw() + i * d;
    for (std::size_t t = 0; t < lens[i]; ++t) {
      const double* xrow = xv.raw() + (i * n + t) * d;
      for (std::size_t j = 0; j < d; ++j) orow[j] += xrow[j];
    }
    const double len = static_cast<double>(lens[i]);
    for (std::size_t j = 0; j < d; ++j) orow[j] /= len;
  }
  return Make("segment_mean", std::move(out), {x.node()},
              [lens = std::move(lens), n, d](Node& self) {
                const double* g = self.grad.raw();
                double* dx = GradOf(self, 0);
                if (!dx) return;
                for (std::size_t i = 0; i < lens.size(); ++i) {
                  const double inv = 1.0 / static_cast<double>(lens[i]);
                  for (std::size_t t = 0; t < lens[i]; ++t)
                    for (std::size_t j = 0; j < d; ++j)
                      dx[(i * n + t) * d + j] += g[i * d + j] * inv;
                }
              });
}

Var LayerNorm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const NdArray& xv = x.value();
  const std::size_t d = xv.rank() ? xv.shape().back() : 0;
  if (d == 0 || gamma.shape() != Shape{d} || beta.shape() != Shape{d}) {
    throw DimensionError("layer_norm: gamma/beta " + ShapeToString(gamma.shape()) +
                         " do not match " + ShapeToString(xv.shape()));
  }
  const std::size_t rows = xv.size() / d;
  NdArray out(xv.shape());
  auto xhat = std::make_shared<std::vector<double>>(xv.size());
  auto rstd = std::make_shared<std::vector<double>>(rows);
  const double* gv = gamma.value().raw();
  const double* bv = beta.value().raw();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xv.raw() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += xr[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<double>(d);
    const double rs = 1.0 / std::sqrt(var + eps);
    (*rstd)[r] = rs;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (xr[j] - mu) * rs;
      (*xhat)[r * d + j] = h;
      out[r * d + j] = h * gv[j] + bv[j];
    }
  }
  return Make("layer_norm", std::move(out), {x.node(), gamma.node(), beta.node()},
              [xhat, rstd, rows, d](Node& self) {
                const double* g = self.grad.raw();
                const double* gv = self.parents[1]->value.raw();
                double* dx = GradOf(self, 0);
                double* dg = GradOf(self, 1);
                double* db = GradOf(self, 2);
                const double invd = 1.0 / static_cast<double>(d);
                for (std::size_t r = 0; r < rows; ++r) {
                  const double* gr = g + r * d;
                  const double* hr = xhat->data() + r * d;
                  if (dg)
                    for (std::size_t j = 0; j < d; ++j) dg[j] += gr[j] * hr[j];
                  if (db)
                    for (std::size_t j = 0; j < d; ++j) db[j] += gr[j];
                  if (dx) {
                    double m1 = 0.0, m2 = 0.0;
                    for (std::size_t j = 0; j < d; ++j) {
                      const double dh = gr[j] * gv[j];
                      m1 += dh;
                      m2 += dh * hr[j];
                    }
                    m1 *= invd;
                    m2 *= invd;
                    const double rs = (*rstd)[r];
                    for (std::size_t j = 0; j < d; ++j)
                      dx[r * d + j] += rs * (gr[j] * gv[j] - m1 - hr[j] * m2);
                  }
                }
              });
}

Var Gelu(const Var& x) {
  NdArray out = x.value();
  for (double& v : out.data()) v = 0.5 * v * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
  return Make("gelu", std::move(out), {x.node()}, [](Node& self) {
    const double* g = self.grad.raw();
    const double* xv = self.parents[0]->value.raw();
    double* dx = GradOf(self, 0);
    if (!dx) return;
    const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double v = xv[i];
      const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
      dx[i] += g[i] * (cdf + v * pdf);
    }
  });
}

Var Log(const Var& x) {
  NdArray out = x.value();
  for (double& v : out.data()) v = std::log(v);
  return Make("log", std::move(out), {x.node()}, [](Node& self) {
    const double* g = self.grad.raw();
    const double* xv = self.parents[0]->value.raw();
    if (double* dx = GradOf(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) dx[i] += g[i] / xv[i];
  });
}

Var Exp(const Var& x) {
  NdArray out = x.value();
  for (double& v : out.data()) v = std::exp(v);
  return Make("exp", std::move(out), {x.node()}, [](Node& self) {
    const double* g = self.grad.raw();
    const double* y = self.value.raw();
    if (double* dx = GradOf(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) dx[i] += g[i] * y[i];
  });
}

Var Transpose(const Var& a) {
  const NdArray& av = a.value();
  if (av.rank() != 2) {
    throw DimensionError("transpose expects 2-D, got " + ShapeToString(av.shape()));
  }
  const std::size_t m = av.dim(0), n = av.dim(1);
  return Make("transpose", poolab::Transpose(av), {a.node()}, [m, n](Node& self) {
    const double* g = self.grad.raw();
    if (double* d = GradOf(self, 0))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) d[i * n + j] += g[j * m + i];
  });
}

Var Reshape(const Var& a, Shape shape) {
  return Make("reshape", a.value().Reshaped(std::move(shape)), {a.node()},
              [](Node& self) {
                const double* g = self.grad.raw();
                if (double* d = GradOf(self, 0))
                  for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] += g[i];
              });
}

Var Permute(const Var& a, std::span<const std::size_t> axes) {
  const NdArray& av = a.value();
  const std::size_t r = av.rank();
  std::vector<bool> seen(r, false);
  bool ok = axes.size() == r;
  for (std::size_t ax : axes) {
    if (!ok || ax >= r || seen[ax]) {
      ok = false;
      break;
    }
    seen[ax] = true;
  }
  if (!ok) throw DimensionError("permute: invalid axes for " + ShapeToString(av.shape()));

  Shape out_shape(r);
  std::vector<std::size_t> in_stride(r, 1);
  for (std::size_t i = r; i-- > 1;) in_stride[i - 1] = in_stride[i] * av.dim(i);
  for (std::size_t i = 0; i < r; ++i) out_shape[i] = av.dim(axes[i]);

  auto src = std::make_shared<std::vector<std::size_t>>(av.size());
  std::vector<std::size_t> idx(r, 0);
  for (std::size_t lin = 0; lin < av.size(); ++lin) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < r; ++i) off += idx[i] * in_stride[axes[i]];
    (*src)[lin] = off;
    for (std::size_t i = r; i-- > 0;) {
      if (++idx[i] < out_shape[i]) break;
      idx[i] = 0;
    }
  }
  NdArray out(out_shape);
  for (std::size_t lin = 0; lin < out.size(); ++lin) out[lin] = av[(*src)[lin]];
  return Make("permute", std::move(out), {a.node()}, [src](Node& self) {
    const double* g = self.grad.raw();
    if (double* d = GradOf(self, 0))
      for (std::size_t lin = 0; lin < src->size(); ++lin) d[(*src)[lin]] += g[lin];
  });
}

Var GatherRows(const Var& table, std::span<const std::size_t> rows) {
  const NdArray& tv = table.value();
  if (tv.rank() != 2) {
    throw DimensionError("gather_rows expects a 2-D table, got " +
                         ShapeToString(tv.shape()));
  }
  const std::size_t d = tv.dim(1);
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  NdArray out({idx.size(), d});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= tv.dim(0)) {
      throw DimensionError("gather_rows: row " + std::to_string(idx[i]) +
                           " out of range for " + ShapeToString(tv.shape()));
    }
    std::copy_n(tv.raw() + idx[i] * d, d, out.raw() + i * d);
  }
  return Make("gather_rows", std::move(out), {table.node()},
              [idx = std::move(idx), d](Node& self) {
                const double* g = self.grad.raw();
                double* dt = GradOf(self, 0);
                if (!dt) return;
                for (std::size_t i = 0; i < idx.size(); ++i)
                  for (std::size_t j = 0; j < d; ++j) dt[idx[i] * d + j] += g[i * d + j];
              });
}

Var Pick(const Var& x, std::span<const std::size_t> idx) {
  const NdArray& xv = x.value();
  if (xv.rank() != 2 || xv.dim(0) != idx.size()) {
    throw DimensionError("pick: " + std::to_string(idx.size()) +
                         " indices for " + ShapeToString(xv.shape()));
  }
  const std::size_t c = xv.dim(1);
  std::vector<std::size_t> cols(idx.begin(), idx.end());
  NdArray out({cols.size()});
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] >= c) throw DimensionError("pick: column out of range");
    out[i] = xv.at(i, cols[i]);
  }
  return Make("pick", std::move(out), {x.node()}, [cols = std::move(cols), c](Node& self) {
    const double* g = self.grad.raw();
    if (double* d = GradOf(self, 0))
      for (std::size_t i = 0; i < cols.size(); ++i) d[i * c + cols[i]] += g[i];
  });
}

Var Stack(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ContractError("stack: no operands");
  const Shape& s = parts[0].shape();
  if (axis > s.size()) throw DimensionError("stack: axis out of range");
  for (const Var& p : parts) {
    if (p.shape() != s) {
      throw DimensionError("stack: shape mismatch " + ShapeToString(p.shape()) +
                           " vs " + ShapeToString(s));
    }
  }
  const std::size_t cnt = parts.size();
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis; i < s.size(); ++i) inner *= s[i];
  Shape out_shape = s;
  out_shape.insert(out_shape.begin() + static_cast<std::ptrdiff_t>(axis), cnt);
  NdArray out(out_shape);
  std::vector<NodePtr> parents;
  for (std::size_t t = 0; t < cnt; ++t) {
    const double* pv = parts[t].value().raw();
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(pv + o * inner, inner, out.raw() + (o * cnt + t) * inner);
    parents.push_back(parts[t].node());
  }
  return Make("stack", std::move(out), std::move(parents),
              [cnt, outer, inner](Node& self) {
                const double* g = self.grad.raw();
                for (std::size_t t = 0; t < cnt; ++t) {
                  double* d = GradOf(self, t);
                  if (!d) continue;
                  for (std::size_t o = 0; o < outer; ++o)
                    for (std::size_t i = 0; i < inner; ++i)
                      d[o * inner + i] += g[(o * cnt + t) * inner + i];
                }
              });
}

Var TileLeading(const Var& x, std::size_t g) {
  const NdArray& xv = x.value();
  Shape out_shape = xv.shape();
  out_shape.insert(out_shape.begin(), g);
  NdArray out(out_shape);
  const std::size_t n = xv.size();
  for (std::size_t i = 0; i < g; ++i) std::copy_n(xv.raw(), n, out.raw() + i * n);
  return Make("tile_leading", std::move(out), {x.node()}, [g, n](Node& self) {
    const double* gr = self.grad.raw();
    if (double* d = GradOf(self, 0))
      for (std::size_t i = 0; i < g; ++i)
        for (std::size_t j = 0; j < n; ++j) d[j] += gr[i * n + j];
  });
}

Var Softmax(const Var& x, std::size_t axis) {
  const NdArray& xv = x.value();
  NdArray out = poolab::Softmax(xv, axis);
  const AxisSplit s = SplitAt(xv.shape(), axis);
  return Make("softmax", std::move(out), {x.node()}, [s](Node& self) {
    const double* g = self.grad.raw();
    const double* y = self.value.raw();
    double* dx = GradOf(self, 0);
    if (!dx) return;
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t in = 0; in < s.inner; ++in) {
        const std::size_t base = o * s.len * s.inner + in;
        double dot = 0.0;
        for (std::size_t t = 0; t < s.len; ++t) {
          const std::size_t k = base + t * s.inner;
          dot += g[k] * y[k];
        }
        for (std::size_t t = 0; t < s.len; ++t) {
          const std::size_t k = base + t * s.inner;
          dx[k] += y[k] * (g[k] - dot);
        }
      }
  });
}

Var MaskedSoftmax(const Var& x, std::span<const std::uint8_t> keep) {
  const NdArray& xv = x.value();
  if (xv.rank() == 0 || keep.size() != xv.size()) {
    throw DimensionError("masked_softmax: mask of " + std::to_string(keep.size()) +
                         " entries for " + ShapeToString(xv.shape()));
  }
  const std::size_t len = xv.shape().back();
  const std::size_t rows = xv.size() / len;
  NdArray out(xv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xv.raw() + r * len;
    const std::uint8_t* kr = keep.data() + r * len;
    double* yr = out.raw() + r * len;
    double mx = -INFINITY;
    for (std::size_t t = 0; t < len; ++t)
      if (kr[t]) mx = std::max(mx, xr[t]);
    if (mx == -INFINITY) throw ContractError("masked_softmax: row with no kept entries");
    double z = 0.0;
    for (std::size_t t = 0; t < len; ++t) {
      if (kr[t]) {
        yr[t] = std::exp(xr[t] - mx);
        z += yr[t];
      }
    }
    for (std::size_t t = 0; t < len; ++t) yr[t] /= z;
  }
  return Make("masked_softmax", std::move(out), {x.node()}, [rows, len](Node& self) {
    const double* g = self.grad.raw();
    const double* y = self.value.raw();
    double* dx = GradOf(self, 0);
    if (!dx) return;
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t t = 0; t < len; ++t) dot += g[r * len + t] * y[r * len + t];
      for (std::size_t t = 0; t < len; ++t)
        dx[r * len + t] += y[r * len + t] * (g[r * len + t] - dot);
    }
  });
}

Var LogSoftmax(const Var& x) {
  const NdArray& xv = x.value();
  if (xv.rank() == 0) throw DimensionError("log_softmax: scalar input");
  const std::size_t len = xv.shape().back();
  const std::size_t rows = xv.size() / len;
  NdArray out(xv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xv.raw() + r * len;
    double mx = -INFINITY;
    for (std::size_t t = 0; t < len; ++t) mx = std::max(mx, xr[t]);
    double z = 0.0;
    for (std::size_t t = 0; t < len; ++t) z += std::exp(xr[t] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t t = 0; t < len; ++t) out[r * len + t] = xr[t] - lse;
  }
  return Make("log_softmax", std::move(out), {x.node()}, [rows, len](Node& self) {
    const double* g = self.grad.raw();
    const double* y = self.value.raw();
    double* dx = GradOf(self, 0);
    if (!dx) return;
    for (std::size_t r = 0; r < rows; ++r) {
      double gs = 0.0;
      for (std::size_t t = 0; t < len; ++t) gs += g[r * len + t];
      for (std::size_t t = 0; t < len; ++t)
        dx[r * len + t] += g[r * len + t] - std::exp(y[r * len + t]) * gs;
    }
  });
}

Var L2NormalizeRows(const Var& x) {
  const NdArray& xv = x.value();
  if (xv.rank() == 0) throw DimensionError("l2_normalize: scalar input");
  const std::size_t d = xv.shape().back();
  const std::size_t rows = xv.size() / d;
  NdArray out(xv.shape());
  auto norms = std::make_shared<std::vector<double>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double ss = 0.0;
    for (std::size_t j = 0; j < d; ++j) ss += xv[r * d + j] * xv[r * d + j];
    const double nrm = std::sqrt(ss);
    if (!(nrm > 0.0)) throw NumericError("l2_normalize: zero-norm row");
    (*norms)[r] = nrm;
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] = xv[r * d + j] / nrm;
  }
  return Make("l2_normalize", std::move(out), {x.node()}, [norms, rows, d](Node& self) {
    const double* g = self.grad.raw();
    const double* y = self.value.raw();
    double* dx = GradOf(self, 0);
    if (!dx) return;
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += g[r * d + j] * y[r * d + j];
      const double inv = 1.0 / (*norms)[r];
      for (std::size_t j = 0; j < d; ++j)
        dx[r * d + j] += (g[r * d + j] - y[r * d + j] * dot) * inv;
    }
  });
}

}  // namespace ops

}  // namespace poolab
