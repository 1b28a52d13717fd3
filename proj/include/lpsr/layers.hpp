#pragma once

// Differentiable 1-D layers over the tape: convolution, transpose
// convolution, batch normalization, activations, fully connected, max pool.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpsr/tape.hpp"

namespace lpsr {

enum class Mode { train, eval };

inline std::int64_t conv1d_out_length(std::int64_t length, std::int64_t k, std::int64_t stride,
                                      std::int64_t padding) {
  return (length + 2 * padding - k) / stride + 1;
}

inline std::int64_t conv1d_transpose_out_length(std::int64_t length, std::int64_t k, std::int64_t stride) {
  return (length - 1) * stride + k;
}

/// Cross-correlation with zero padding. x: (B,IC,L), w: (OC,IC,K), b: (1,OC,1).
inline Var conv1d(Tape& t, Var x, Var w, Var b, std::int64_t stride, std::int64_t padding) {
  const Shape sx = t.shape(x), sw = t.shape(w), sb = t.shape(b);
  if (stride < 1) throw std::invalid_argument("conv1d: stride must be >= 1");
  if (padding < 0) throw std::invalid_argument("conv1d: padding must be >= 0");
  if (sw.channel != sx.channel) {
    throw std::invalid_argument("conv1d: weight shape " + sw.str() + " expects " +
                                std::to_string(sw.channel) + " input channels but input shape is " + sx.str());
  }
  if (!(sb == Shape{1, sw.batch, 1})) {
    throw std::invalid_argument("conv1d: bias shape " + sb.str() + " must be (1," +
                                std::to_string(sw.batch) + ",1) for weight shape " + sw.str());
  }
  const std::int64_t B = sx.batch, IC = sx.channel, L = sx.length;
  const std::int64_t OC = sw.batch, K = sw.length;
  const std::int64_t Lo = conv1d_out_length(L, K, stride, padding);
  if (Lo < 1) {
    throw std::invalid_argument("conv1d: kernel shape " + sw.str() + " does not fit input shape " + sx.str());
  }

  const auto& vx = t.values(x);
  const auto& vw = t.values(w);
  const auto& vb = t.values(b);
  std::vector<double> out(static_cast<std::size_t>(B * OC * Lo));
  for (std::int64_t bb = 0; bb < B; ++bb) {
    for (std::int64_t oc = 0; oc < OC; ++oc) {
      double* y = out.data() + (bb * OC + oc) * Lo;
      const double bias = vb[static_cast<std::size_t>(oc)];
      for (std::int64_t i = 0; i < Lo; ++i) y[i] = bias;
      for (std::int64_t ic = 0; ic < IC; ++ic) {
        const double* xs = vx.data() + (bb * IC + ic) * L;
        const double* ws = vw.data() + (oc * IC + ic) * K;
        for (std::int64_t kk = 0; kk < K; ++kk) {
          const double wv = ws[kk];
          const std::int64_t off = kk - padding;
          std::int64_t ilo = off < 0 ? (-off + stride - 1) / stride : 0;
          std::int64_t ihi = (L - 1 - off) / stride;
          if (ihi > Lo - 1) ihi = Lo - 1;
          for (std::int64_t i = ilo; i <= ihi; ++i) y[i] += wv * xs[i * stride + off];
        }
      }
    }
  }

  const int ix = x.id, iw = w.id, ib = b.id;
  return t.make(Shape{B, OC, Lo}, std::move(out), {x, w, b},
                [=](Tape& tp, int self) {
    const auto& g = tp.node_grad(self);
    const auto& vx2 = tp.values(Var{ix});
    const auto& vw2 = tp.values(Var{iw});
    auto* gx = tp.grad_accum(ix);
    auto* gw = tp.grad_accum(iw);
    auto* gb = tp.grad_accum(ib);
    for (std::int64_t bb = 0; bb < B; ++bb) {
      for (std::int64_t oc = 0; oc < OC; ++oc) {
        const double* gy = g.data() + (bb * OC + oc) * Lo;
        if (gb) {
          double s = 0.0;
          for (std::int64_t i = 0; i < Lo; ++i) s += gy[i];
          (*gb)[static_cast<std::size_t>(oc)] += s;
        }
        for (std::int64_t ic = 0; ic < IC; ++ic) {
          const double* xs = vx2.data() + (bb * IC + ic) * L;
          const double* ws = vw2.data() + (oc * IC + ic) * K;
          double* gxs = gx ? gx->data() + (bb * IC + ic) * L : nullptr;
          double* gws = gw ? gw->data() + (oc * IC + ic) * K : nullptr;
          for (std::int64_t kk = 0; kk < K; ++kk) {
            const std::int64_t off = kk - padding;
            std::int64_t ilo = off < 0 ? (-off + stride - 1) / stride : 0;
            std::int64_t ihi = (L - 1 - off) / stride;
            if (ihi > Lo - 1) ihi = Lo - 1;
            if (gws) {
              double s = 0.0;
              for (std::int64_t i = ilo; i <= ihi; ++i) s += gy[i] * xs[i * stride + off];
              gws[kk] += s;
            }
            if (gxs) {
              const double wv = ws[kk];
              for (std::int64_t i = ilo; i <= ihi; ++i) gxs[i * stride + off] += wv * gy[i];
            }
          }
        }
      }
    }
  });
}

/// Adjoint of conv1d with the same stride and no padding.
/// x: (B,IC,L), w: (IC,OC,K), b: (1,OC,1); out length (L-1)*stride + K.
inline Var conv1d_transpose(Tape& t, Var x, Var w, Var b, std::int64_t stride) {
  const Shape sx = t.shape(x), sw = t.shape(w), sb = t.shape(b);
  if (stride < 1) throw std::invalid_argument("conv1d_transpose: stride must be >= 1");
  if (sw.batch != sx.channel) {
    throw std::invalid_argument("conv1d_transpose: weight shape " + sw.str() + " expects " +
                                std::to_string(sw.batch) + " input channels but input shape is " + sx.str());
  }
  if (!(sb == Shape{1, sw.channel, 1})) {
    throw std::invalid_argument("conv1d_transpose: bias shape " + sb.str() + " must be (1," +
                                std::to_string(sw.channel) + ",1) for weight shape " + sw.str());
  }
  const std::int64_t B = sx.batch, IC = sx.channel, L = sx.length;
  const std::int64_t OC = sw.channel, K = sw.length;
  const std::int64_t Lo = conv1d_transpose_out_length(L, K, stride);

  const auto& vx = t.values(x);
  const auto& vw = t.values(w);
  const auto& vb = t.values(b);
  std::vector<double> out(static_cast<std::size_t>(B * OC * Lo));
  for (std::int64_t bb = 0; bb < B; ++bb) {
    for (std::int64_t oc = 0; oc < OC; ++oc) {
      double* y = out.data() + (bb * OC + oc) * Lo;
      const double bias = vb[static_cast<std::size_t>(oc)];
      for (std::int64_t i = 0; i < Lo; ++i) y[i] = bias;
      for (std::int64_t ic = 0; ic < IC; ++ic) {
        const double* xs = vx.data() + (bb * IC + ic) * L;
        const double* ws = vw.data() + (ic * OC + oc) * K;
        for (std::int64_t kk = 0; kk < K; ++kk) {
          const double wv = ws[kk];
          for (std::int64_t i = 0; i < L; ++i) y[i * stride + kk] += wv * xs[i];
        }
      }
    }
  }

  const int ix = x.id, iw = w.id, ib = b.id;
  return t.make(Shape{B, OC, Lo}, std::move(out), {x, w, b},
                [=](Tape& tp, int self) {
    const auto& g = tp.node_grad(self);
    const auto& vx2 = tp.values(Var{ix});
    const auto& vw2 = tp.values(Var{iw});
    auto* gx = tp.grad_accum(ix);
    auto* gw = tp.grad_accum(iw);
    auto* gb = tp.grad_accum(ib);
    for (std::int64_t bb = 0; bb < B; ++bb) {
      for (std::int64_t oc = 0; oc < OC; ++oc) {
        const double* gy = g.data() + (bb * OC + oc) * Lo;
        if (gb) {
          double s = 0.0;
          for (std::int64_t i = 0; i < Lo; ++i) s += gy[i];
          (*gb)[static_cast<std::size_t>(oc)] += s;
        }
        for (std::int64_t ic = 0; ic < IC; ++ic) {
          const double* xs = vx2.data() + (bb * IC + ic) * L;
          const double* ws = vw2.data() + (ic * OC + oc) * K;
          double* gxs = gx ? gx->data() + (bb * IC + ic) * L : nullptr;
          double* gws = gw ? gw->data() + (ic * OC + oc) * K : nullptr;
          for (std::int64_t kk = 0; kk < K; ++kk) {
            if (gws) {
              double s = 0.0;
              for (std::int64_t i = 0; i < L; ++i) s += xs[i] * gy[i * stride + kk];
              gws[kk] += s;
            }
            if (gxs) {
              const double wv = ws[kk];
              for (std::int64_t i = 0; i < L; ++i) gxs[i] += wv * gy[i * stride + kk];
            }
          }
        }
      }
    }
  });
}

/// Per-channel batch normalization. Train mode normalizes with batch
/// statistics (biased variance) and updates the running stats in place by
/// EMA; eval mode normalizes with the running stats. The variance floor
/// guards constant channels: denom = sqrt(max(var, var_floor)).
inline Var batch_norm(Tape& t, Var x, Var gamma, Var beta, std::vector<double>& running_mean,
                      std::vector<double>& running_var, Mode mode, double momentum = 0.1,
                      double var_floor = 1e-5) {
  const Shape sx = t.shape(x);
  const std::int64_t B = sx.batch, C = sx.channel, L = sx.length;
  const Shape expect{1, C, 1};
  if (!(t.shape(gamma) == expect) || !(t.shape(beta) == expect)) {
    throw std::invalid_argument("batch_norm: gamma/beta must have shape " + expect.str() +
                                " for input shape " + sx.str());
  }
  if (static_cast<std::int64_t>(running_mean.size()) != C ||
      static_cast<std::int64_t>(running_var.size()) != C) {
    throw std::invalid_argument("batch_norm: running stats must have one entry per channel");
  }

  const auto& vx = t.values(x);
  const auto& vg = t.values(gamma);
  const auto& vbeta = t.values(beta);

  auto xhat = std::make_shared<std::vector<double>>(vx.size());
  auto denom = std::make_shared<std::vector<double>>(static_cast<std::size_t>(C));
  auto floored = std::make_shared<std::vector<char>>(static_cast<std::size_t>(C));
  std::vector<double> out(vx.size());

  const std::int64_t n = B * L;
  for (std::int64_t c = 0; c < C; ++c) {
    double mu, var;
    if (mode == Mode::train) {
      double s = 0.0;
      for (std::int64_t bb = 0; bb < B; ++bb) {
        const double* xs = vx.data() + (bb * C + c) * L;
        for (std::int64_t i = 0; i < L; ++i) s += xs[i];
      }
      mu = s / static_cast<double>(n);
      double sq = 0.0;
      for (std::int64_t bb = 0; bb < B; ++bb) {
        const double* xs = vx.data() + (bb * C + c) * L;
        for (std::int64_t i = 0; i < L; ++i) {
          const double d = xs[i] - mu;
          sq += d * d;
        }
      }
      var = sq / static_cast<double>(n);
      running_mean[static_cast<std::size_t>(c)] =
          (1.0 - momentum) * running_mean[static_cast<std::size_t>(c)] + momentum * mu;
      running_var[static_cast<std::size_t>(c)] =
          (1.0 - momentum) * running_var[static_cast<std::size_t>(c)] + momentum * var;
    } else {
      mu = running_mean[static_cast<std::size_t>(c)];
      var = running_var[static_cast<std::size_t>(c)];
    }
    const bool fl = var <= var_floor;
    const double d = std::sqrt(fl ? var_floor : var);
    (*denom)[static_cast<std::size_t>(c)] = d;
    (*floored)[static_cast<std::size_t>(c)] = fl ? 1 : 0;
    const double inv = 1.0 / d;
    const double gc = vg[static_cast<std::size_t>(c)];
    const double bc = vbeta[static_cast<std::size_t>(c)];
    for (std::int64_t bb = 0; bb < B; ++bb) {
      const double* xs = vx.data() + (bb * C + c) * L;
      double* hs = xhat->data() + (bb * C + c) * L;
      double* ys = out.data() + (bb * C + c) * L;
      for (std::int64_t i = 0; i < L; ++i) {
        hs[i] = (xs[i] - mu) * inv;
        ys[i] = gc * hs[i] + bc;
      }
    }
  }

  const int ix = x.id, ig = gamma.id, ibeta = beta.id;
  const bool train = mode == Mode::train;
  return t.make(sx, std::move(out), {x, gamma, beta},
                [=](Tape& tp, int self) {
    const auto& g = tp.node_grad(self);
    const auto& vg2 = tp.values(Var{ig});
    auto* gx = tp.grad_accum(ix);
    auto* gg = tp.grad_accum(ig);
    auto* gb = tp.grad_accum(ibeta);
    for (std::int64_t c = 0; c < C; ++c) {
      const double d = (*denom)[static_cast<std::size_t>(c)];
      const double gc = vg2[static_cast<std::size_t>(c)];
      double sum_g = 0.0, sum_gx = 0.0;
      for (std::int64_t bb = 0; bb < B; ++bb) {
        const double* gs = g.data() + (bb * C + c) * L;
        const double* hs = xhat->data() + (bb * C + c) * L;
        for (std::int64_t i = 0; i < L; ++i) {
          sum_g += gs[i];
          sum_gx += gs[i] * hs[i];
        }
      }
      if (gg) (*gg)[static_cast<std::size_t>(c)] += sum_gx;
      if (gb) (*gb)[static_cast<std::size_t>(c)] += sum_g;
      if (gx) {
        const double inv = 1.0 / d;
        const double mg = sum_g / static_cast<double>(n);
        const double mgx = sum_gx / static_cast<double>(n);
        const bool fl = (*floored)[static_cast<std::size_t>(c)] != 0;
        for (std::int64_t bb = 0; bb < B; ++bb) {
          const double* gs = g.data() + (bb * C + c) * L;
          const double* hs = xhat->data() + (bb * C + c) * L;
          double* gxs = gx->data() + (bb * C + c) * L;
          if (!train) {
            // Running stats are constants w.r.t. x.
            for (std::int64_t i = 0; i < L; ++i) gxs[i] += gc * inv * gs[i];
          } else if (fl) {
            // Denominator pinned at the floor; only the mean depends on x.
            for (std::int64_t i = 0; i < L; ++i) gxs[i] += gc * inv * (gs[i] - mg);
          } else {
            for (std::int64_t i = 0; i < L; ++i) gxs[i] += gc * inv * (gs[i] - mg - hs[i] * mgx);
          }
        }
      }
    }
  });
}

enum class Activation { relu, leaky_relu, sigmoid };

inline Var relu(Tape& t, Var x) {
  const auto& vx = t.values(x);
  std::vector<double> out(vx.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = vx[i] > 0.0 ? vx[i] : 0.0;
  const int ix = x.id;
  return t.make(t.shape(x), std::move(out), {x}, [ix](Tape& tp, int self) {
    const auto& g = tp.node_grad(self);
    const auto& vx2 = tp.values(Var{ix});
    if (auto* gx = tp.grad_accum(ix)) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (vx2[i] > 0.0) (*gx)[i] += g[i];
      }
    }
  });
}

inline Var leaky_relu(Tape& t, Var x, double slope) {
  if (!(slope > 0.0 && slope < 1.0)) {
    throw std::invalid_argument("leaky_relu: slope must be in (0,1), got " + std::to_string(slope));
  }
  const auto& vx = t.values(x);
  std::vector<double> out(vx.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = vx[i] > 0.0 ? vx[i] : slope * vx[i];
  const int ix = x.id;
  return t.make(t.shape(x), std::move(out), {x}, [ix, slope](Tape& tp, int self) {
    const auto& g = tp.node_grad(self);
    const auto& vx2 = tp.values(Var{ix});
    if (auto* gx = tp.grad_accum(ix)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += (vx2[i] > 0.0 ? 1.0 : slope) * g[i];
    }
  });
}

inline Var sigmoid(Tape& t, Var x) {
  const auto& vx = t.values(x);
  auto y = std::make_shared<std::vector<double>>(vx.size());
  for (std::size_t i = 0; i < vx.size(); ++i) (*y)[i] = 1.0 / (1.0 + std::exp(-vx[i]));
  std::vector<double> out = *y;
  const int ix = x.id;
  return t.make(t.shape(x), std::move(out), {x}, [ix, y](Tape& tp, int self) {
    const auto& g = tp.node_grad(self);
    if (auto* gx = tp.grad_accum(ix)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] * (*y)[i] * (1.0 - (*y)[i]);
    }
  });
}

inline Var activation(Tape& t, Activation kind, Var x, double slope = 0.2) {
  switch (kind) {
    case Activation::relu: return relu(t, x);
    case Activation::leaky_relu: return leaky_relu(t, x, slope);
    case Activation::sigmoid: return sigmoid(t, x);
  }
  throw std::invalid_argument("activation: unknown kind");
}

/// Affine map over the flattened (channel, length) axes.
/// x: (B,C,L) read as (B, C*L); w: (1, OUT, IN); b: (1, 1, OUT); y: (B, 1, OUT).
inline Var fully_connected(Tape& t, Var x, Var w, Var b) {
  const Shape sx = t.shape(x), sw = t.shape(w), sb = t.shape(b);
  const std::int64_t B = sx.batch, IN = sx.channel * sx.length;
  const std::int64_t OUT = sw.channel;
  if (sw.batch != 1 || sw.length != IN) {
    throw std::invalid_argument("fully_connected: weight shape " + sw.str() +
                                " incompatible with flattened input shape " + sx.str());
  }
  if (!(sb == Shape{1, 1, OUT})) {
    throw std::invalid_argument("fully_connected: bias shape " + sb.str() + " must be (1,1," +
                                std::to_string(OUT) + ")");
  }
  const auto& vx = t.values(x);
  const auto& vw = t.values(w);
  const auto& vb = t.values(b);
  std::vector<double> out(static_cast<std::size_t>(B * OUT));
  for (std::int64_t bb = 0; bb < B; ++bb) {
    const double* xs = vx.data() + bb * IN;
    for (std::int64_t o = 0; o < OUT; ++o) {
      const double* ws = vw.data() + o * IN;
      double s = vb[static_cast<std::size_t>(o)];
      for (std::int64_t j = 0; j < IN; ++j) s += ws[j] * xs[j];
      out[static_cast<std::size_t>(bb * OUT + o)] = s;
    }
  }
  const int ix = x.id, iw = w.id, ib = b.id;
  return t.make(Shape{B, 1, OUT}, std::move(out), {x, w, b},
                [=](Tape& tp, int self) {
    const auto& g = tp.node_grad(self);
    const auto& vx2 = tp.values(Var{ix});
    const auto& vw2 = tp.values(Var{iw});
    auto* gx = tp.grad_accum(ix);
    auto* gw = tp.grad_accum(iw);
    auto* gb = tp.grad_accum(ib);
    for (std::int64_t bb = 0; bb < B; ++bb) {
      const double* xs = vx2.data() + bb * IN;
      const double* gy = g.data() + bb * OUT;
      for (std::int64_t o = 0; o < OUT; ++o) {
        const double go = gy[o];
        if (gb) (*gb)[static_cast<std::size_t>(o)] += go;
        if (gw) {
          double* gws = gw->data() + o * IN;
          for (std::int64_t j = 0; j < IN; ++j) gws[j] += go * xs[j];
        }
        if (gx) {
          const double* ws = vw2.data() + o * IN;
          double* gxs = gx->data() + bb * IN;
          for (std::int64_t j = 0; j < IN; ++j) gxs[j] += go * ws[j];
        }
      }
    }
  });
}

/// Sliding-window maximum with replicate-edge padding of k-1 samples total,
/// so stride 1 preserves length. The subgradient routes to the first
/// (lowest-index) occurrence of the window maximum.
inline Var max_pool1d(Tape& t, Var x, std::int64_t k, std::int64_t stride) {
  const Shape sx = t.shape(x);
  const std::int64_t B = sx.batch, C = sx.channel, L = sx.length;
  if (k < 1 || stride < 1) throw std::invalid_argument("max_pool1d: k and stride must be >= 1");
  if (k > L + (k - 1)) {
    throw std::invalid_argument("max_pool1d: kernel " + std::to_string(k) +
                                " exceeds padded length of input shape " + sx.str());
  }
  const std::int64_t pad_l = (k - 1) / 2;
  const std::int64_t Lo = (L - 1) / stride + 1;

  const auto& vx = t.values(x);
  std::vector<double> out(static_cast<std::size_t>(B * C * Lo));
  auto arg = std::make_shared<std::vector<std::int32_t>>(out.size());
  for (std::int64_t bc = 0; bc < B * C; ++bc) {
    const double* xs = vx.data() + bc * L;
    double* ys = out.data() + bc * Lo;
    std::int32_t* as = arg->data() + bc * Lo;
    for (std::int64_t i = 0; i < Lo; ++i) {
      const std::int64_t start = i * stride - pad_l;
      std::int64_t src0 = std::clamp<std::int64_t>(start, 0, L - 1);
      double best = xs[src0];
      std::int64_t best_idx = src0;
      for (std::int64_t kk = 1; kk < k; ++kk) {
        const std::int64_t src = std::clamp<std::int64_t>(start + kk, 0, L - 1);
        if (xs[src] > best) {
          best = xs[src];
          best_idx = src;
        }
      }
      ys[i] = best;
      as[i] = static_cast<std::int32_t>(best_idx);
    }
  }
  const int ix = x.id;
  return t.make(Shape{B, C, Lo}, std::move(out), {x}, [ix, arg, L, Lo](Tape& tp, int self) {
    const auto& g = tp.node_grad(self);
    auto* gx = tp.grad_accum(ix);
    if (!gx) return;
    const std::int64_t planes = static_cast<std::int64_t>(g.size()) / Lo;
    for (std::int64_t bc = 0; bc < planes; ++bc) {
      const double* gs = g.data() + bc * Lo;
      const std::int32_t* as = arg->data() + bc * Lo;
      double* gxs = gx->data() + bc * L;
      for (std::int64_t i = 0; i < Lo; ++i) gxs[as[i]] += gs[i];
    }
  });
}

/// Parameter handles for one residual block: conv-bn-relu-conv-bn plus the
/// identity skip. Both convs must preserve channel count and length.
struct ResidualBlockVars {
  Var w1, b1, gamma1, beta1;
  Var w2, b2, gamma2, beta2;
  std::vector<double>* rmean1 = nullptr;
  std::vector<double>* rvar1 = nullptr;
  std::vector<double>* rmean2 = nullptr;
  std::vector<double>* rvar2 = nullptr;
};

inline Var residual_block(Tape& t, Var x, const ResidualBlockVars& p, Mode mode,
                          double momentum = 0.1, double var_floor = 1e-5) {
  const Shape sx = t.shape(x);
  for (Var w : {p.w1, p.w2}) {
    const Shape sw = t.shape(w);
    if (sw.batch != sx.channel || sw.channel != sx.channel || sw.length % 2 == 0) {
      throw std::invalid_argument("residual_block: conv weight " + sw.str() +
                                  " would change the shape of input " + sx.str() +
                                  " (need matching channels and odd kernel)");
    }
  }
  Var h = conv1d(t, x, p.w1, p.b1, 1, (t.shape(p.w1).length - 1) / 2);
  h = batch_norm(t, h, p.gamma1, p.beta1, *p.rmean1, *p.rvar1, mode, momentum, var_floor);
  h = relu(t, h);
  h = conv1d(t, h, p.w2, p.b2, 1, (t.shape(p.w2).length - 1) / 2);
  h = batch_norm(t, h, p.gamma2, p.beta2, *p.rmean2, *p.rvar2, mode, momentum, var_floor);
  return add(t, h, x);
}

}  // namespace lpsr
