#pragma once

// Reverse-mode autodiff tape. Ops append nodes in execution order, which is
// by construction a topological order of the dataflow graph; backward() walks
// the nodes once in reverse, accumulating (never overwriting) gradients at
// fan-out. A tape is confined to one thread.

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lpsr/tensor.hpp"

namespace lpsr {

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int self)>;

  /// When set, every op output is scanned for NaN/Inf. Used by tests; the
  /// training loop checks loss scalars instead.
  bool check_finite = false;

  Var leaf(const Tensor& t) { return leaf(t.shape, t.values, t.requires_grad); }

  Var leaf(const Shape& shape, std::vector<double> values, bool requires_grad) {
    if (static_cast<std::int64_t>(values.size()) != shape.size()) {
      throw std::invalid_argument("tape leaf: storage size does not match shape " + shape.str());
    }
    nodes_.push_back(Node{shape, std::move(values), {}, requires_grad, nullptr});
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  /// Appends an op node. `backward` reads the node's own gradient via
  /// node_grad() and accumulates into its inputs via grad_accum().
  Var make(const Shape& shape, std::vector<double> values, std::initializer_list<Var> inputs,
           BackwardFn backward) {
    if (static_cast<std::int64_t>(values.size()) != shape.size()) {
      throw std::invalid_argument("tape op: output size does not match shape " + shape.str());
    }
    bool needs = false;
    for (Var in : inputs) {
      if (!in.valid() || in.id >= static_cast<int>(nodes_.size())) {
        throw std::invalid_argument("tape op: input var is not on this tape");
      }
      needs = needs || nodes_[static_cast<std::size_t>(in.id)].needs_grad;
    }
    if (check_finite && !all_finite(values)) {
      throw std::runtime_error("tape op: non-finite value in forward output");
    }
    nodes_.push_back(Node{shape, std::move(values), {}, needs, needs ? std::move(backward) : nullptr});
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  const Shape& shape(Var v) const { return node(v.id).shape; }
  const std::vector<double>& values(Var v) const { return node(v.id).values; }
  Tensor read(Var v) const { return Tensor(node(v.id).shape, node(v.id).values); }

  double scalar(Var v) const {
    const Node& n = node(v.id);
    if (n.shape.size() != 1) {
      throw std::invalid_argument("scalar() on non-scalar node of shape " + n.shape.str());
    }
    return n.values[0];
  }

  bool needs_grad(int id) const { return node(id).needs_grad; }

  const std::vector<double>& node_grad(int id) const {
    const Node& n = node(id);
    if (n.grad.empty()) throw std::logic_error("node_grad: gradient not populated");
    return n.grad;
  }

  /// Accumulation buffer for `id`, zero-initialized on first touch.
  /// Returns nullptr when the node does not participate in the backward pass.
  std::vector<double>* grad_accum(int id) {
    Node& n = node(id);
    if (!n.needs_grad) return nullptr;
    if (n.grad.empty()) n.grad.assign(n.values.size(), 0.0);
    return &n.grad;
  }

  /// Runs reverse-mode accumulation from a scalar loss. Each reachable node's
  /// backward fn fires exactly once, in reverse insertion order.
  void backward(Var loss) {
    Node& l = node(loss.id);
    if (l.shape.size() != 1) {
      throw std::invalid_argument("backward: loss must be scalar, got shape " + l.shape.str());
    }
    if (!l.needs_grad) return;
    l.grad.assign(1, 1.0);
    for (int id = loss.id; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (n.grad.empty() || !n.backward) continue;
      n.backward(*this, id);
    }
  }

  bool has_grad(Var v) const { return !node(v.id).grad.empty(); }

  const std::vector<double>& gradient(Var v) const {
    const Node& n = node(v.id);
    if (n.grad.empty()) {
      throw std::logic_error("gradient: no gradient at node (did backward run, and does the leaf require grad?)");
    }
    return n.grad;
  }

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;
    bool needs_grad = false;
    BackwardFn backward;
  };

  Node& node(int id) {
    if (id < 0 || id >= static_cast<int>(nodes_.size())) throw std::logic_error("tape: bad node id");
    return nodes_[static_cast<std::size_t>(id)];
  }
  const Node& node(int id) const {
    if (id < 0 || id >= static_cast<int>(nodes_.size())) throw std::logic_error("tape: bad node id");
    return nodes_[static_cast<std::size_t>(id)];
  }

  std::vector<Node> nodes_;
};

namespace detail {
inline void require_same_shape(const Tape& t, Var a, Var b, const char* op) {
  if (!(t.shape(a) == t.shape(b))) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + t.shape(a).str() +
                                " vs " + t.shape(b).str());
  }
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise and reduction ops.

inline Var add(Tape& t, Var a, Var b) {
  detail::require_same_shape(t, a, b, "add");
  const auto& va = t.values(a);
  const auto& vb = t.values(b);
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] + vb[i];
  const int ia = a.id, ib = b.id;
  return t.make(t.shape(a), std::move(out), {a, b}, [ia, ib](Tape& tp, int self) {
    const auto& g = tp.node_grad(self);
    if (auto* ga = tp.grad_accum(ia)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    }
    if (auto* gb = tp.grad_accum(ib)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i];
    }
  });
}

inline Var sub(Tape& t, Var a, Var b) {
  detail::require_same_shape(t, a, b, "sub");
  const auto& va = t.values(a);
  const auto& vb = t.values(b);
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] - vb[i];
  const int ia = a.id, ib = b.id;
  return t.make(t.shape(a), std::move(out), {a, b}, [ia, ib](Tape& tp, int self) {
    const auto& g = tp.node_grad(self);
    if (auto* ga = tp.grad_accum(ia)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    }
    if (auto* gb = tp.grad_accum(ib)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
    }
  });
}

inline Var mul(Tape& t, Var a, Var b) {
  detail::require_same_shape(t, a, b, "mul");
  const auto& va = t.values(a);
  const auto& vb = t.values(b);
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * vb[i];
  const int ia = a.id, ib = b.id;
  return t.make(t.shape(a), std::move(out), {a, b}, [ia, ib](Tape& tp, int self) {
    const auto& g = tp.node_grad(self);
    const auto& va2 = tp.values(Var{ia});
    const auto& vb2 = tp.values(Var{ib});
    if (auto* ga = tp.grad_accum(ia)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * vb2[i];
    }
    if (auto* gb = tp.grad_accum(ib)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * va2[i];
    }
  });
}

inline Var square(Tape& t, Var x) { return mul(t, x, x); }

/// y = a*x + b, elementwise with scalar coefficients.
inline Var affine(Tape& t, Var x, double a, double b) {
  const auto& vx = t.values(x);
  std::vector<double> out(vx.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * vx[i] + b;
  const int ix = x.id;
  return t.make(t.shape(x), std::move(out), {x}, [ix, a](Tape& tp, int self) {
    const auto& g = tp.node_grad(self);
    if (auto* gx = tp.grad_accum(ix)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += a * g[i];
    }
  });
}

inline Var neg(Tape& t, Var x) { return affine(t, x, -1.0, 0.0); }
inline Var scale(Tape& t, Var x, double a) { return affine(t, x, a, 0.0); }

/// log(max(x, eps)); gradient is 1/x where x > eps and 0 at the guard.
inline Var log_guarded(Tape& t, Var x, double eps = 1e-12) {
  const auto& vx = t.values(x);
  std::vector<double> out(vx.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(vx[i] > eps ? vx[i] : eps);
  const int ix = x.id;
  return t.make(t.shape(x), std::move(out), {x}, [ix, eps](Tape& tp, int self) {
    const auto& g = tp.node_grad(self);
    const auto& vx2 = tp.values(Var{ix});
    if (auto* gx = tp.grad_accum(ix)) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (vx2[i] > eps) (*gx)[i] += g[i] / vx2[i];
      }
    }
  });
}

/// |x|; subgradient sign(x) with sign(0) = 0.
inline Var abs_value(Tape& t, Var x) {
  const auto& vx = t.values(x);
  std::vector<double> out(vx.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::fabs(vx[i]);
  const int ix = x.id;
  return t.make(t.shape(x), std::move(out), {x}, [ix](Tape& tp, int self) {
    const auto& g = tp.node_grad(self);
    const auto& vx2 = tp.values(Var{ix});
    if (auto* gx = tp.grad_accum(ix)) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (vx2[i] > 0.0) (*gx)[i] += g[i];
        else if (vx2[i] < 0.0) (*gx)[i] -= g[i];
      }
    }
  });
}

/// First difference along length: y[i] = x[i+1] - x[i], length N-1.
inline Var first_diff(Tape& t, Var x) {
  const Shape s = t.shape(x);
  if (s.length < 2) {
    throw std::invalid_argument("first_diff: needs length >= 2, got shape " + s.str());
  }
  const Shape so{s.batch, s.channel, s.length - 1};
  const auto& vx = t.values(x);
  std::vector<double> out(static_cast<std::size_t>(so.size()));
  const std::int64_t L = s.length, Lo = so.length;
  for (std::int64_t bc = 0; bc < s.batch * s.channel; ++bc) {
    for (std::int64_t i = 0; i < Lo; ++i) {
      out[static_cast<std::size_t>(bc * Lo + i)] =
          vx[static_cast<std::size_t>(bc * L + i + 1)] - vx[static_cast<std::size_t>(bc * L + i)];
    }
  }
  const int ix = x.id;
  return t.make(so, std::move(out), {x}, [ix, L, Lo](Tape& tp, int self) {
    const auto& g = tp.node_grad(self);
    auto* gx = tp.grad_accum(ix);
    if (!gx) return;
    const std::int64_t planes = static_cast<std::int64_t>(g.size()) / Lo;
    for (std::int64_t bc = 0; bc < planes; ++bc) {
      for (std::int64_t i = 0; i < Lo; ++i) {
        const double gi = g[static_cast<std::size_t>(bc * Lo + i)];
        (*gx)[static_cast<std::size_t>(bc * L + i + 1)] += gi;
        (*gx)[static_cast<std::size_t>(bc * L + i)] -= gi;
      }
    }
  });
}

/// Stacks b's channels after a's; batch and length must match.
inline Var concat_channels(Tape& t, Var a, Var b) {
  const Shape sa = t.shape(a), sb = t.shape(b);
  if (sa.batch != sb.batch || sa.length != sb.length) {
    throw std::invalid_argument("concat_channels: incompatible shapes " + sa.str() + " vs " + sb.str());
  }
  const Shape so{sa.batch, sa.channel + sb.channel, sa.length};
  const auto& va = t.values(a);
  const auto& vb = t.values(b);
  std::vector<double> out(static_cast<std::size_t>(so.size()));
  const std::int64_t L = sa.length;
  for (std::int64_t bb = 0; bb < sa.batch; ++bb) {
    double* dst = out.data() + bb * so.channel * L;
    const double* pa = va.data() + bb * sa.channel * L;
    const double* pb = vb.data() + bb * sb.channel * L;
    for (std::int64_t i = 0; i < sa.channel * L; ++i) dst[i] = pa[i];
    for (std::int64_t i = 0; i < sb.channel * L; ++i) dst[sa.channel * L + i] = pb[i];
  }
  const int ia = a.id, ib = b.id;
  return t.make(so, std::move(out), {a, b}, [ia, ib, sa, sb](Tape& tp, int self) {
    const auto& g = tp.node_grad(self);
    const std::int64_t L = sa.length;
    const std::int64_t co = sa.channel + sb.channel;
    if (auto* ga = tp.grad_accum(ia)) {
      for (std::int64_t bb = 0; bb < sa.batch; ++bb) {
        const double* src = g.data() + bb * co * L;
        double* dst = ga->data() + bb * sa.channel * L;
        for (std::int64_t i = 0; i < sa.channel * L; ++i) dst[i] += src[i];
      }
    }
    if (auto* gb = tp.grad_accum(ib)) {
      for (std::int64_t bb = 0; bb < sa.batch; ++bb) {
        const double* src = g.data() + bb * co * L + sa.channel * L;
        double* dst = gb->data() + bb * sb.channel * L;
        for (std::int64_t i = 0; i < sb.channel * L; ++i) dst[i] += src[i];
      }
    }
  });
}

/// Full reduction to a (1,1,1) scalar.
inline Var sum_all(Tape& t, Var x) {
  const auto& vx = t.values(x);
  double s = 0.0;
  for (double v : vx) s += v;
  const int ix = x.id;
  return t.make(Shape{1, 1, 1}, {s}, {x}, [ix](Tape& tp, int self) {
    const double g = tp.node_grad(self)[0];
    if (auto* gx = tp.grad_accum(ix)) {
      for (double& v : *gx) v += g;
    }
  });
}

inline Var mean_all(Tape& t, Var x) {
  const double n = static_cast<double>(t.shape(x).size());
  return scale(t, sum_all(t, x), 1.0 / n);
}

}  // namespace lpsr
