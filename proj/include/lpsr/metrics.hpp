#pragma once

// Shape-based evaluation metrics: point-wise MSE, peak load error, frequency
// component error on DFT amplitude spectra, critical point error via
// Ramer-Douglas-Peucker simplification, and the 1-D Wasserstein distance for
// distribution comparisons. Includes Table-style report assembly.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace lpsr {

namespace detail {
inline void require_equal(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": lengths differ, " + std::to_string(a) +
                                " vs " + std::to_string(b));
  }
}
}  // namespace detail

inline double mse(const std::vector<double>& a, const std::vector<double>& b) {
  detail::require_equal(a.size(), b.size(), "mse");
  if (a.empty()) throw std::invalid_argument("mse: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

/// Peak load error: absolute difference of the profile maxima.
inline double ple(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ple: empty input");
  return std::fabs(*std::max_element(a.begin(), a.end()) - *std::max_element(b.begin(), b.end()));
}

// ---------------------------------------------------------------------------
// DFT. Two independent routes: the O(N^2) definition and a mixed-radix fast
// transform; both exposed, cross-checked by tests.

inline std::vector<std::complex<double>> dft_naive(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) * static_cast<double>(j) /
                         static_cast<double>(n);
      acc += x[j] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

namespace detail {

inline std::size_t smallest_factor(std::size_t n) {
  for (std::size_t p = 2; p * p <= n; ++p) {
    if (n % p == 0) return p;
  }
  return n;
}

inline std::vector<std::complex<double>> fft_rec(const std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  if (n == 1) return x;
  const std::size_t p = smallest_factor(n);
  if (p == n) {
    // Prime length: fall back to the definition.
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
      std::complex<double> acc{0.0, 0.0};
      for (std::size_t j = 0; j < n; ++j) {
        const double ang = -2.0 * std::numbers::pi *
                           static_cast<double>((k * j) % n) / static_cast<double>(n);
        acc += x[j] * std::complex<double>(std::cos(ang), std::sin(ang));
      }
      out[k] = acc;
    }
    return out;
  }
  const std::size_t m = n / p;
  std::vector<std::vector<std::complex<double>>> sub(p);
  for (std::size_t r = 0; r < p; ++r) {
    sub[r].resize(m);
    for (std::size_t j = 0; j < m; ++j) sub[r][j] = x[j * p + r];
    sub[r] = fft_rec(sub[r]);
  }
  std::vector<std::complex<double>> tw(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double ang = -2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
    tw[j] = std::complex<double>(std::cos(ang), std::sin(ang));
  }
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t r = 0; r < p; ++r) acc += tw[(r * k) % n] * sub[r][k % m];
    out[k] = acc;
  }
  return out;
}

}  // namespace detail

inline std::vector<std::complex<double>> dft_fast(const std::vector<double>& x) {
  std::vector<std::complex<double>> c(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) c[i] = {x[i], 0.0};
  return detail::fft_rec(c);
}

/// Unnormalized forward amplitude spectrum |X_k|, k = 0..N-1.
inline std::vector<double> dft_amplitude(const std::vector<double>& x, bool use_fast = true) {
  if (x.empty()) throw std::invalid_argument("dft_amplitude: empty input");
  const auto spec = use_fast ? dft_fast(x) : dft_naive(x);
  std::vector<double> amp(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) amp[i] = std::abs(spec[i]);
  return amp;
}

/// Frequency component error: mean L1 distance between amplitude spectra.
inline double fce(const std::vector<double>& a, const std::vector<double>& b) {
  detail::require_equal(a.size(), b.size(), "fce");
  if (a.empty()) throw std::invalid_argument("fce: empty input");
  const auto sa = dft_amplitude(a);
  const auto sb = dft_amplitude(b);
  double s = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) s += std::fabs(sa[i] - sb[i]);
  return s / static_cast<double>(a.size());
}

// ---------------------------------------------------------------------------
// Ramer-Douglas-Peucker simplification over (index, value) points.

struct Polyline {
  std::vector<int> indices;     // strictly increasing, endpoints always present
  std::vector<double> values;

  std::size_t size() const { return indices.size(); }
};

/// Keeps the point farthest from the chord when its perpendicular distance
/// exceeds eps (strictly), recursing on both sides; first index wins ties.
inline Polyline rdp_simplify(const std::vector<double>& x, double eps) {
  if (x.size() < 2) throw std::invalid_argument("rdp_simplify: need at least 2 points");
  if (eps < 0.0) throw std::invalid_argument("rdp_simplify: eps must be >= 0");
  const std::size_t n = x.size();
  std::vector<char> keep(n, 0);
  keep[0] = keep[n - 1] = 1;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, n - 1}};
  while (!stack.empty()) {
    const auto [lo, hi] = stack.back();
    stack.pop_back();
    if (hi - lo < 2) continue;
    const double dx = static_cast<double>(hi - lo);
    const double dy = x[hi] - x[lo];
    const double len = std::sqrt(dx * dx + dy * dy);
    double best = 0.0;
    std::size_t best_i = 0;
    for (std::size_t i = lo + 1; i < hi; ++i) {
      const double d = std::fabs(dy * static_cast<double>(i - lo) - dx * (x[i] - x[lo])) / len;
      if (d > best) {
        best = d;
        best_i = i;
      }
    }
    if (best > eps) {
      keep[best_i] = 1;
      stack.push_back({lo, best_i});
      stack.push_back({best_i, hi});
    }
  }
  Polyline out;
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i]) {
      out.indices.push_back(static_cast<int>(i));
      out.values.push_back(x[i]);
    }
  }
  return out;
}

/// Scale-free default tolerance: 5% of the reference profile's value range.
inline double default_rdp_epsilon(const std::vector<double>& reference) {
  if (reference.empty()) throw std::invalid_argument("default_rdp_epsilon: empty input");
  const auto [mn, mx] = std::minmax_element(reference.begin(), reference.end());
  return 0.05 * (*mx - *mn);
}

/// Critical point error: normalized difference in retained point counts
/// under a shared tolerance.
inline double cpe(const std::vector<double>& gen, const std::vector<double>& truth, double eps) {
  detail::require_equal(gen.size(), truth.size(), "cpe");
  const auto rg = rdp_simplify(gen, eps);
  const auto rt = rdp_simplify(truth, eps);
  return std::fabs(static_cast<double>(rg.size()) - static_cast<double>(rt.size())) /
         static_cast<double>(gen.size());
}

// ---------------------------------------------------------------------------
// 1-D Wasserstein distance between empirical samples.

namespace detail {
inline double sorted_quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size()) - 0.5;
  if (pos <= 0.0) return sorted.front();
  if (pos >= static_cast<double>(sorted.size() - 1)) return sorted.back();
  const auto lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  return (1.0 - frac) * sorted[lo] + frac * sorted[lo + 1];
}
}  // namespace detail

/// W1 between empirical distributions: mean |sorted(a)_i - sorted(b)_i| for
/// equal sample counts; unequal counts are aligned on a common quantile grid.
inline double wasserstein_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein_1d: empty sample set");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a.size() == b.size()) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
    return s / static_cast<double>(a.size());
  }
  const std::size_t m = std::max(a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double q = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
    s += std::fabs(detail::sorted_quantile(a, q) - detail::sorted_quantile(b, q));
  }
  return s / static_cast<double>(m);
}

/// Amplitudes at bins 1..k_bins (DC skipped: interval averaging preserves the
/// mean, so bin 0 carries no shape information).
inline std::vector<double> spectral_feature(const std::vector<double>& x, int k_bins) {
  const auto amp = dft_amplitude(x);
  if (k_bins < 1 || static_cast<std::size_t>(k_bins) >= amp.size()) {
    throw std::invalid_argument("spectral_feature: k_bins out of range");
  }
  return std::vector<double>(amp.begin() + 1, amp.begin() + 1 + k_bins);
}

/// Per-axis W1 between two profile sets' spectral features.
inline std::vector<double> spectral_wasserstein(const std::vector<std::vector<double>>& set_a,
                                                const std::vector<std::vector<double>>& set_b,
                                                int k_bins) {
  if (set_a.empty() || set_b.empty()) {
    throw std::invalid_argument("spectral_wasserstein: empty profile set");
  }
  std::vector<std::vector<double>> fa, fb;
  for (const auto& x : set_a) fa.push_back(spectral_feature(x, k_bins));
  for (const auto& x : set_b) fb.push_back(spectral_feature(x, k_bins));
  std::vector<double> out(static_cast<std::size_t>(k_bins));
  for (int k = 0; k < k_bins; ++k) {
    std::vector<double> ca, cb;
    for (const auto& f : fa) ca.push_back(f[static_cast<std::size_t>(k)]);
    for (const auto& f : fb) cb.push_back(f[static_cast<std::size_t>(k)]);
    out[static_cast<std::size_t>(k)] = wasserstein_1d(std::move(ca), std::move(cb));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report assembly. Gain follows the table convention
// (baseline - method) / baseline, so the baseline row reads 0%.

struct MetricReport {
  std::string baseline = "LERP";
  std::vector<std::string> methods;                   // report row order
  std::vector<std::string> metrics;                   // report column order
  std::vector<std::string> profile_ids;               // shared across methods
  std::map<std::string, std::map<std::string, std::vector<double>>> per_profile;
  std::map<std::string, std::map<std::string, double>> mean;
  std::map<std::string, std::map<std::string, double>> gain_percent;
};

inline MetricReport build_report(
    const std::vector<std::string>& methods,
    const std::map<std::string, std::map<std::string, std::vector<double>>>& per_profile,
    const std::vector<std::string>& profile_ids,
    const std::map<std::string, std::map<std::string, double>>& aggregates = {},
    const std::string& baseline = "LERP") {
  MetricReport r;
  r.baseline = baseline;
  r.methods = methods;
  r.profile_ids = profile_ids;
  auto base_it = per_profile.find(baseline);
  if (std::find(methods.begin(), methods.end(), baseline) == methods.end() ||
      base_it == per_profile.end()) {
    throw std::invalid_argument("build_report: baseline method '" + baseline + "' missing");
  }
  for (const auto& [metric, vals] : base_it->second) r.metrics.push_back(metric);
  if (auto agg = aggregates.find(baseline); agg != aggregates.end()) {
    for (const auto& [metric, v] : agg->second) r.metrics.push_back(metric);
  }

  for (const auto& method : methods) {
    auto it = per_profile.find(method);
    if (it == per_profile.end()) {
      throw std::invalid_argument("build_report: method '" + method + "' has no metric values");
    }
    if (it->second.size() != base_it->second.size()) {
      throw std::invalid_argument("build_report: method '" + method +
                                  "' does not carry the baseline's metric set");
    }
    for (const auto& [metric, vals] : it->second) {
      if (vals.size() != profile_ids.size()) {
        throw std::invalid_argument("build_report: method '" + method + "', metric '" + metric +
                                    "' was not evaluated on the shared test set (" +
                                    std::to_string(vals.size()) + " vs " +
                                    std::to_string(profile_ids.size()) + " profiles)");
      }
      double s = 0.0;
      for (double v : vals) s += v;
      r.per_profile[method][metric] = vals;
      r.mean[method][metric] = vals.empty() ? 0.0 : s / static_cast<double>(vals.size());
    }
    if (auto agg = aggregates.find(method); agg != aggregates.end()) {
      for (const auto& [metric, v] : agg->second) r.mean[method][metric] = v;
    }
  }
  for (const auto& method : methods) {
    for (const auto& metric : r.metrics) {
      if (!r.mean[method].count(metric)) {
        throw std::invalid_argument("build_report: method '" + method + "' is missing metric '" +
                                    metric + "'");
      }
      const double b = r.mean[baseline][metric];
      const double m = r.mean[method][metric];
      r.gain_percent[method][metric] = b > 0.0 ? 100.0 * (b - m) / b : 0.0;
    }
  }
  return r;
}

inline void write_report_csv(const std::string& path, const MetricReport& r) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_report_csv: cannot open " + path);
  f << "method,metric,mean,gain_vs_lerp\n";
  for (const auto& method : r.methods) {
    for (const auto& metric : r.metrics) {
      f << method << "," << metric << "," << r.mean.at(method).at(metric) << ","
        << r.gain_percent.at(method).at(metric) << "\n";
    }
  }
}

/// Long-format per-profile values for distribution plots.
inline void write_report_profiles_csv(const std::string& path, const MetricReport& r) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_report_profiles_csv: cannot open " + path);
  f << "method,metric,profile,value\n";
  for (const auto& method : r.methods) {
    auto mit = r.per_profile.find(method);
    if (mit == r.per_profile.end()) continue;
    for (const auto& [metric, vals] : mit->second) {
      for (std::size_t i = 0; i < vals.size(); ++i) {
        f << method << "," << metric << "," << r.profile_ids[i] << "," << vals[i] << "\n";
      }
    }
  }
}

inline void write_report_json(const std::string& path, const MetricReport& r) {
  nlohmann::json j;
  j["baseline"] = r.baseline;
  j["methods"] = r.methods;
  j["metrics"] = r.metrics;
  j["profile_ids"] = r.profile_ids;
  j["mean"] = r.mean;
  j["gain_vs_lerp_percent"] = r.gain_percent;
  j["per_profile"] = r.per_profile;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_report_json: cannot open " + path);
  f << j.dump(2) << "\n";
}

inline MetricReport load_report_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_report_json: cannot open " + path);
  nlohmann::json j;
  f >> j;
  MetricReport r;
  r.baseline = j.at("baseline").get<std::string>();
  r.methods = j.at("methods").get<std::vector<std::string>>();
  r.metrics = j.at("metrics").get<std::vector<std::string>>();
  r.profile_ids = j.at("profile_ids").get<std::vector<std::string>>();
  r.mean = j.at("mean").get<std::map<std::string, std::map<std::string, double>>>();
  r.gain_percent =
      j.at("gain_vs_lerp_percent").get<std::map<std::string, std::map<std::string, double>>>();
  r.per_profile =
      j.at("per_profile")
          .get<std::map<std::string, std::map<std::string, std::vector<double>>>>();
  return r;
}

}  // namespace lpsr
