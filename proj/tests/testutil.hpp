#pragma once

// Shared test helpers: central finite-difference gradient checking and
// tie-free random signals for kinked ops (max pool, |.|, ReLU).

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

#include "lpsr/rng.hpp"
#include "lpsr/tape.hpp"

namespace lpsr::test {

/// `build` constructs a fresh graph from the probed values and returns
/// (probed leaf, scalar loss). Returns the worst relative error between the
/// tape gradient and central differences.
template <typename Build>
double gradcheck(Build&& build, const std::vector<double>& x0, double h = 1e-5) {
  Tape t0;
  auto [leaf, loss] = build(t0, x0);
  t0.backward(loss);
  const std::vector<double> g = t0.gradient(leaf);
  double worst = 0.0;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    auto xp = x0;
    xp[i] += h;
    auto xm = x0;
    xm[i] -= h;
    Tape tp;
    auto [lp, lossp] = build(tp, xp);
    Tape tm;
    auto [lm, lossm] = build(tm, xm);
    const double fd = (tp.scalar(lossp) - tm.scalar(lossm)) / (2.0 * h);
    const double err = std::fabs(fd - g[i]) / std::max({1.0, std::fabs(fd), std::fabs(g[i])});
    worst = std::max(worst, err);
  }
  return worst;
}

inline std::vector<double> randn_vec(Rng& rng, std::size_t n, double sd = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal(0.0, sd);
  return v;
}

inline std::vector<double> rand_vec(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

/// Values on a jittered lattice: pairwise gaps >= 0.09, everything at least
/// 0.04 from zero, and pairwise differences at least 0.09 from zero. Keeps
/// finite differences away from max/abs/ReLU kinks.
inline std::vector<double> separated_signal(Rng& rng, std::size_t n) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = (static_cast<double>(perm[i]) - static_cast<double>(n) / 2.0) * 0.1 + 0.05 +
           rng.uniform(-0.004, 0.004);
  }
  return v;
}

}  // namespace lpsr::test
