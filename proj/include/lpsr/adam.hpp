#pragma once

// Adam optimizer over named parameter arrays.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "lpsr/tensor.hpp"

namespace lpsr {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.99;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamItem {
  std::string name;
  std::vector<double>* param = nullptr;
  const std::vector<double>* grad = nullptr;
};

/// Keeps first/second moments per parameter name, zero-initialized on first
/// use. One step() call advances the shared timestep once and updates every
/// listed parameter with bias-corrected moments.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }
  std::int64_t timestep() const { return t_; }

  void step(const std::vector<AdamItem>& items) {
    // Validate everything first so a rejected step leaves no partial update.
    for (const auto& it : items) {
      if (it.param->size() != it.grad->size()) {
        throw std::invalid_argument("adam: parameter '" + it.name + "' and its gradient differ in size");
      }
      if (!all_finite(*it.grad)) {
        throw std::runtime_error("adam: non-finite gradient for parameter '" + it.name + "'");
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (const auto& it : items) {
      auto& mom = moments_[it.name];
      if (mom.m.empty()) {
        mom.m.assign(it.param->size(), 0.0);
        mom.v.assign(it.param->size(), 0.0);
      }
      const auto& g = *it.grad;
      auto& p = *it.param;
      for (std::size_t i = 0; i < p.size(); ++i) {
        mom.m[i] = cfg_.beta1 * mom.m[i] + (1.0 - cfg_.beta1) * g[i];
        mom.v[i] = cfg_.beta2 * mom.v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
        const double mhat = mom.m[i] / bc1;
        const double vhat = mom.v[i] / bc2;
        p[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
  }

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  AdamConfig cfg_;
  std::int64_t t_ = 0;
  std::unordered_map<std::string, Moments> moments_;
};

}  // namespace lpsr
