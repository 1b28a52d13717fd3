#pragma once

// Reference upsamplers: linear interpolation anchored at block centers, and
// the MSE-only CNN setup (generator architecture, adversarial and
// feature-matching weights zeroed).

#include <stdexcept>
#include <vector>

#include "lpsr/data.hpp"
#include "lpsr/losses.hpp"
#include "lpsr/networks.hpp"

namespace lpsr {

/// Linear interpolation through the LR values placed at their block centers,
/// flat over the half-blocks before the first and after the last center.
/// Never overshoots [min(lr), max(lr)], so peaks are not restored.
inline std::vector<double> lerp_upsample(const std::vector<double>& lr, int alpha) {
  if (alpha < 2) throw std::invalid_argument("lerp_upsample: alpha must be >= 2");
  if (lr.empty()) throw std::invalid_argument("lerp_upsample: empty input");
  const std::size_t m = lr.size();
  const std::size_t n = m * static_cast<std::size_t>(alpha);
  std::vector<double> hr(n);
  const double half = (static_cast<double>(alpha) - 1.0) / 2.0;  // center of block 0
  for (std::size_t i = 0; i < n; ++i) {
    const double pos = (static_cast<double>(i) - half) / static_cast<double>(alpha);
    if (pos <= 0.0) {
      hr[i] = lr.front();
    } else if (pos >= static_cast<double>(m - 1)) {
      hr[i] = lr.back();
    } else {
      const auto lo = static_cast<std::size_t>(pos);
      const double frac = pos - static_cast<double>(lo);
      hr[i] = lr[lo] + frac * (lr[lo + 1] - lr[lo]);
    }
  }
  return hr;
}

inline LoadProfile lerp_upsample(const LoadProfile& lr, int alpha) {
  if (lr.period_min % alpha != 0) {
    throw std::invalid_argument("lerp_upsample: alpha does not divide the LR period");
  }
  LoadProfile hr;
  hr.values_kw = lerp_upsample(lr.values_kw, alpha);
  hr.period_min = lr.period_min / alpha;
  hr.household_id = lr.household_id;
  hr.day = lr.day;
  return hr;
}

/// The CNN control: the generator architecture trained purely on the content
/// loss. Same fingerprint as the GAN generator, no discriminator, no polisher.
struct CnnBaselineSetup {
  GeneratorConfig architecture;
  LossWeights weights{0.0, 0.0};
};

inline CnnBaselineSetup cnn_baseline_config(const GeneratorConfig& generator) {
  generator.validate();
  return CnnBaselineSetup{generator, LossWeights{0.0, 0.0}};
}

}  // namespace lpsr
