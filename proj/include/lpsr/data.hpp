#pragma once

// Load-profile dataset machinery: the synthetic household-day generator, the
// averaging downsampler, weather interpolation, dataset splits, and corpus
// normalization. Profiles are day-bounded (midnight to midnight).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lpsr/rng.hpp"

namespace lpsr {

constexpr int kMinutesPerDay = 1440;
constexpr const char* kDaylightChannel = "daylight";

struct LoadProfile {
  std::vector<double> values_kw;
  int period_min = 5;
  std::string household_id;
  int day = 0;

  std::size_t size() const { return values_kw.size(); }
};

inline void validate_daily(const LoadProfile& p) {
  if (static_cast<int>(p.size()) * p.period_min != kMinutesPerDay) {
    throw std::invalid_argument("load profile: " + std::to_string(p.size()) + " samples at " +
                                std::to_string(p.period_min) + " min do not cover one day");
  }
  for (double v : p.values_kw) {
    if (!(v >= 0.0)) throw std::invalid_argument("load profile: negative or non-finite value");
  }
}

struct WeatherTrack {
  std::vector<std::string> names;
  std::vector<std::vector<double>> channels;
  int period_min = 60;
  int day = 0;

  std::size_t channel_count() const { return channels.size(); }

  std::size_t channel_index(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return i;
    }
    throw std::invalid_argument("weather track: no channel named '" + name + "'");
  }

  const std::vector<double>& channel(const std::string& name) const {
    return channels[channel_index(name)];
  }
};

struct DatasetSplit {
  std::vector<int> train, val, test;
};

// ---------------------------------------------------------------------------
// Downsampling (interval averaging plus acquisition noise).

/// Each LR point is the mean of `alpha` consecutive HR points plus Gaussian
/// noise of the given variance, clamped at zero from below. With
/// noise_var == 0 no noise is drawn, so the rng stream is untouched.
inline LoadProfile downsample(const LoadProfile& hr, int alpha, double noise_var, Rng& rng) {
  if (alpha < 1) throw std::invalid_argument("downsample: alpha must be >= 1");
  if (noise_var < 0.0) throw std::invalid_argument("downsample: noise variance must be >= 0");
  if (hr.size() % static_cast<std::size_t>(alpha) != 0) {
    throw std::invalid_argument("downsample: alpha " + std::to_string(alpha) +
                                " does not divide profile length " + std::to_string(hr.size()));
  }
  LoadProfile lr;
  lr.period_min = hr.period_min * alpha;
  lr.household_id = hr.household_id;
  lr.day = hr.day;
  const std::size_t m = hr.size() / static_cast<std::size_t>(alpha);
  lr.values_kw.resize(m);
  const double sd = noise_var > 0.0 ? std::sqrt(noise_var) : 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (int j = 0; j < alpha; ++j) s += hr.values_kw[i * static_cast<std::size_t>(alpha) + j];
    double v = s / static_cast<double>(alpha);
    if (sd > 0.0) v += rng.normal(0.0, sd);
    lr.values_kw[i] = v < 0.0 ? 0.0 : v;
  }
  return lr;
}

/// Block mean without noise, for plain value arrays (weather resampling).
inline std::vector<double> block_mean(const std::vector<double>& v, int alpha) {
  if (alpha < 1 || v.size() % static_cast<std::size_t>(alpha) != 0) {
    throw std::invalid_argument("block_mean: alpha " + std::to_string(alpha) +
                                " does not divide length " + std::to_string(v.size()));
  }
  std::vector<double> out(v.size() / static_cast<std::size_t>(alpha));
  for (std::size_t i = 0; i < out.size(); ++i) {
    double s = 0.0;
    for (int j = 0; j < alpha; ++j) s += v[i * static_cast<std::size_t>(alpha) + j];
    out[i] = s / static_cast<double>(alpha);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Weather interpolation.

/// Piecewise-linear upsampling from knot to knot: output covers the same
/// span with (len-1) * src/target + 1 samples and preserves the knots. The
/// daylight flag channel is carried by nearest neighbor instead.
inline WeatherTrack interpolate_weather(const WeatherTrack& src, int target_period_min) {
  if (target_period_min < 1 || src.period_min % target_period_min != 0) {
    throw std::invalid_argument("interpolate_weather: target period " +
                                std::to_string(target_period_min) + " must divide source period " +
                                std::to_string(src.period_min));
  }
  WeatherTrack out;
  out.names = src.names;
  out.period_min = target_period_min;
  out.day = src.day;
  const std::size_t ratio = static_cast<std::size_t>(src.period_min / target_period_min);
  for (std::size_t ci = 0; ci < src.channels.size(); ++ci) {
    const auto& ch = src.channels[ci];
    if (ch.empty()) throw std::invalid_argument("interpolate_weather: empty channel '" + src.names[ci] + "'");
    const bool nearest = src.names[ci] == kDaylightChannel;
    std::vector<double> o((ch.size() - 1) * ratio + 1);
    for (std::size_t i = 0; i < o.size(); ++i) {
      const std::size_t j = i / ratio;
      const std::size_t r = i % ratio;
      if (r == 0) {
        o[i] = ch[j];
      } else {
        const double frac = static_cast<double>(r) / static_cast<double>(ratio);
        o[i] = nearest ? (frac < 0.5 ? ch[j] : ch[j + 1]) : ch[j] + frac * (ch[j + 1] - ch[j]);
      }
    }
    out.channels.push_back(std::move(o));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset split.

inline DatasetSplit split_dataset(std::size_t count, double f_train, double f_val, double f_test,
                                  std::uint64_t seed) {
  if (std::fabs(f_train + f_val + f_test - 1.0) > 1e-9 || f_train < 0 || f_val < 0 || f_test < 0) {
    throw std::invalid_argument("split_dataset: fractions must be nonnegative and sum to 1");
  }
  std::vector<int> idx(count);
  for (std::size_t i = 0; i < count; ++i) idx[i] = static_cast<int>(i);
  Rng rng(derive_seed(seed, {kStreamSplit}));
  rng.shuffle(idx);
  const std::size_t n_val = static_cast<std::size_t>(f_val * static_cast<double>(count));
  const std::size_t n_test = static_cast<std::size_t>(f_test * static_cast<double>(count));
  const std::size_t n_train = count - n_val - n_test;
  DatasetSplit s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
               idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
  return s;
}

// ---------------------------------------------------------------------------
// Normalization (z-score with statistics from the training split only).

class Normalizer {
 public:
  double load_mean = 0.0;
  double load_std = 1.0;
  std::vector<std::string> weather_names;
  std::vector<double> weather_mean, weather_std;

  void fit_load(const std::vector<LoadProfile>& profiles, const std::vector<int>& indices) {
    double s = 0.0;
    std::size_t n = 0;
    for (int i : indices) {
      for (double v : profiles[static_cast<std::size_t>(i)].values_kw) s += v;
      n += profiles[static_cast<std::size_t>(i)].size();
    }
    if (n == 0) throw std::invalid_argument("normalizer: empty training split");
    load_mean = s / static_cast<double>(n);
    double sq = 0.0;
    for (int i : indices) {
      for (double v : profiles[static_cast<std::size_t>(i)].values_kw) {
        sq += (v - load_mean) * (v - load_mean);
      }
    }
    load_std = floor_std(std::sqrt(sq / static_cast<double>(n)));
  }

  /// Per-channel statistics over the weather tracks seen by the training rows.
  void fit_weather(const std::vector<const WeatherTrack*>& tracks) {
    if (tracks.empty()) {
      weather_names.clear();
      weather_mean.clear();
      weather_std.clear();
      return;
    }
    weather_names = tracks[0]->names;
    const std::size_t nc = weather_names.size();
    weather_mean.assign(nc, 0.0);
    weather_std.assign(nc, 1.0);
    for (std::size_t c = 0; c < nc; ++c) {
      double s = 0.0;
      std::size_t n = 0;
      for (const auto* t : tracks) {
        for (double v : t->channels[c]) s += v;
        n += t->channels[c].size();
      }
      const double m = s / static_cast<double>(n);
      double sq = 0.0;
      for (const auto* t : tracks) {
        for (double v : t->channels[c]) sq += (v - m) * (v - m);
      }
      weather_mean[c] = m;
      weather_std[c] = floor_std(std::sqrt(sq / static_cast<double>(n)));
    }
  }

  std::vector<double> normalize_load(const std::vector<double>& v) const {
    std::vector<double> o(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) o[i] = (v[i] - load_mean) / load_std;
    return o;
  }

  std::vector<double> denormalize_load(const std::vector<double>& v) const {
    std::vector<double> o(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) o[i] = v[i] * load_std + load_mean;
    return o;
  }

  std::vector<double> normalize_weather(std::size_t channel, const std::vector<double>& v) const {
    std::vector<double> o(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      o[i] = (v[i] - weather_mean[channel]) / weather_std[channel];
    }
    return o;
  }

 private:
  static double floor_std(double s) { return s < 1e-8 ? 1e-8 : s; }
};

// ---------------------------------------------------------------------------
// Synthetic corpus. Stands in for a gated smart-meter corpus: base load plus
// a weather-driven thermostatic appliance plus Poisson event appliances, so
// profiles carry intra-interval power steps by construction and the
// load-weather coupling is learnable.

struct ThermostaticSpec {
  double power_kw = 2.2;
  double duty_at_ref = 0.45;
  double duty_slope_per_degc = 0.03;
  double duty_min = 0.05;
  double duty_max = 0.95;
  double ref_temp_c = 20.0;
  double cycle_period_min = 25.0;
};

struct EventApplianceSpec {
  double power_kw = 1.8;
  double rate_per_day = 2.0;
  double duration_min = 20.0;
};

struct WeatherModel {
  double temp_mean_c = 20.0;
  double temp_amp_c = 6.0;
  double temp_day_sigma_c = 2.0;
  double knot_sigma = 0.3;
};

struct SynthSpec {
  double base_load_kw = 0.35;
  double base_wander_frac = 0.05;
  ThermostaticSpec thermostat;
  std::vector<EventApplianceSpec> events{
      {1.8, 2.0, 20.0},   // cooking
      {1.2, 1.0, 45.0},   // laundry
      {2.0, 3.0, 10.0},   // kettle-like spikes
  };
  WeatherModel weather;
  std::uint64_t seed = 1;

  void validate() const {
    if (base_load_kw < 0.0 || thermostat.power_kw < 0.0) {
      throw std::invalid_argument("synth spec: powers must be nonnegative");
    }
    for (const auto& e : events) {
      if (e.power_kw < 0.0 || e.rate_per_day < 0.0 || e.duration_min <= 0.0) {
        throw std::invalid_argument("synth spec: event powers and rates must be nonnegative");
      }
    }
  }
};

/// One day of hourly weather knots (25 of them, so interpolation spans the
/// whole day). Channels: temperature, humidity, wind_speed, visibility,
/// daylight.
inline WeatherTrack synthesize_day_weather(const SynthSpec& spec, Rng& rng) {
  const auto& wm = spec.weather;
  WeatherTrack t;
  t.names = {"temperature", "humidity", "wind_speed", "visibility", kDaylightChannel};
  t.period_min = 60;
  t.channels.assign(5, std::vector<double>(25));
  const double day_offset = rng.normal(0.0, wm.temp_day_sigma_c);
  const double sunrise = 6.0 + rng.uniform(-0.7, 0.7);
  const double sunset = 18.0 + rng.uniform(-0.7, 0.7);
  const double wind_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (int h = 0; h <= 24; ++h) {
    const double hh = static_cast<double>(h);
    const double temp = wm.temp_mean_c + day_offset +
                        wm.temp_amp_c * std::sin(2.0 * std::numbers::pi * (hh - 9.0) / 24.0) +
                        rng.normal(0.0, wm.knot_sigma);
    const double humidity =
        std::clamp(70.0 - 2.0 * (temp - wm.temp_mean_c) + rng.normal(0.0, 2.0), 15.0, 100.0);
    const double wind = std::max(
        0.0, 3.0 + 2.0 * std::sin(2.0 * std::numbers::pi * (hh - 12.0) / 24.0 + wind_phase) +
                 rng.normal(0.0, 0.5));
    const double visibility = std::clamp(9.5 - 0.03 * (humidity - 70.0) + rng.normal(0.0, 0.3), 1.0, 10.0);
    t.channels[0][static_cast<std::size_t>(h)] = temp;
    t.channels[1][static_cast<std::size_t>(h)] = humidity;
    t.channels[2][static_cast<std::size_t>(h)] = wind;
    t.channels[3][static_cast<std::size_t>(h)] = visibility;
    t.channels[4][static_cast<std::size_t>(h)] = (hh >= sunrise && hh < sunset) ? 1.0 : 0.0;
  }
  return t;
}

/// Crops every channel to `n` samples (the 5-min weather grid spans 289
/// knot-to-knot samples; daily profiles use the first 288).
inline WeatherTrack crop_weather(WeatherTrack t, std::size_t n) {
  for (auto& ch : t.channels) {
    if (ch.size() < n) throw std::invalid_argument("crop_weather: track shorter than requested length");
    ch.resize(n);
  }
  return t;
}

/// One household-day at 5-min resolution driven by the given 5-min weather.
inline LoadProfile synthesize_profile(const SynthSpec& spec, const WeatherTrack& weather5, Rng& rng) {
  spec.validate();
  const std::size_t n = static_cast<std::size_t>(kMinutesPerDay / 5);
  const auto& temp = weather5.channel("temperature");
  if (temp.size() < n) throw std::invalid_argument("synthesize_profile: weather track too short");

  const double wander_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double thermo_phase = rng.uniform(0.0, spec.thermostat.cycle_period_min);

  struct Event {
    double start_min, end_min, power;
  };
  std::vector<Event> events;
  for (const auto& e : spec.events) {
    const int count = rng.poisson(e.rate_per_day);
    for (int j = 0; j < count; ++j) {
      const double start = rng.uniform(0.0, static_cast<double>(kMinutesPerDay) - e.duration_min);
      events.push_back({start, start + e.duration_min, e.power_kw});
    }
  }

  LoadProfile p;
  p.period_min = 5;
  p.day = weather5.day;
  p.values_kw.resize(n);
  const auto& th = spec.thermostat;
  for (std::size_t i = 0; i < n; ++i) {
    const double t_min = static_cast<double>(i) * 5.0;
    double v = spec.base_load_kw *
               (1.0 + spec.base_wander_frac *
                          std::sin(2.0 * std::numbers::pi * t_min / kMinutesPerDay + wander_phase));
    const double duty =
        std::clamp(th.duty_at_ref + th.duty_slope_per_degc * (temp[i] - th.ref_temp_c), th.duty_min,
                   th.duty_max);
    double cycle_pos = std::fmod(t_min - thermo_phase, th.cycle_period_min);
    if (cycle_pos < 0.0) cycle_pos += th.cycle_period_min;
    if (cycle_pos < duty * th.cycle_period_min) v += th.power_kw;
    for (const auto& e : events) {
      if (t_min >= e.start_min && t_min < e.end_min) v += e.power;
    }
    p.values_kw[i] = v;
  }
  return p;
}

/// Spec-level entry point: one profile with its own weather, both at 5-min.
inline std::pair<LoadProfile, WeatherTrack> synthesize_profile(const SynthSpec& spec, Rng& rng) {
  WeatherTrack hourly = synthesize_day_weather(spec, rng);
  WeatherTrack w5 = crop_weather(interpolate_weather(hourly, 5), kMinutesPerDay / 5);
  LoadProfile p = synthesize_profile(spec, w5, rng);
  return {std::move(p), std::move(w5)};
}

// ---------------------------------------------------------------------------
// Whole-corpus builder. Weather is shared per day across households, matching
// the CSV schema; household parameters vary deterministically with the seed.

struct CorpusSpec {
  int days = 100;
  int households = 20;
  SynthSpec base;
  std::uint64_t seed = 1;
};

struct Corpus {
  int days = 0;
  int households = 0;
  std::vector<LoadProfile> hr;          // index = household * days + day
  std::vector<WeatherTrack> weather;    // one per day, 5-min grid

  const WeatherTrack& weather_for(const LoadProfile& p) const {
    return weather[static_cast<std::size_t>(p.day)];
  }
};

inline SynthSpec vary_household(const SynthSpec& base, Rng& rng) {
  SynthSpec s = base;
  s.base_load_kw *= rng.uniform(0.8, 1.2);
  s.thermostat.power_kw *= rng.uniform(0.8, 1.2);
  s.thermostat.duty_at_ref += rng.uniform(-0.05, 0.05);
  for (auto& e : s.events) {
    e.power_kw *= rng.uniform(0.85, 1.15);
    e.rate_per_day *= rng.uniform(0.8, 1.2);
  }
  return s;
}

inline Corpus build_synthetic_corpus(const CorpusSpec& cs) {
  if (cs.days < 1 || cs.households < 1) {
    throw std::invalid_argument("corpus spec: days and households must be >= 1");
  }
  Corpus c;
  c.days = cs.days;
  c.households = cs.households;
  c.weather.reserve(static_cast<std::size_t>(cs.days));
  for (int d = 0; d < cs.days; ++d) {
    Rng rng(derive_seed(cs.seed, {kStreamWeather, static_cast<std::uint64_t>(d)}));
    WeatherTrack hourly = synthesize_day_weather(cs.base, rng);
    hourly.day = d;
    c.weather.push_back(crop_weather(interpolate_weather(hourly, 5), kMinutesPerDay / 5));
  }
  c.hr.reserve(static_cast<std::size_t>(cs.days) * static_cast<std::size_t>(cs.households));
  for (int h = 0; h < cs.households; ++h) {
    Rng hh_rng(derive_seed(cs.seed, {kStreamCorpus, static_cast<std::uint64_t>(h)}));
    const SynthSpec spec_h = vary_household(cs.base, hh_rng);
    for (int d = 0; d < cs.days; ++d) {
      Rng rng(derive_seed(cs.seed, {kStreamCorpus, static_cast<std::uint64_t>(h),
                                    static_cast<std::uint64_t>(d)}));
      LoadProfile p = synthesize_profile(spec_h, c.weather[static_cast<std::size_t>(d)], rng);
      p.household_id = "h" + std::to_string(h);
      p.day = d;
      c.hr.push_back(std::move(p));
    }
  }
  return c;
}

/// Noisy LR set paired 1:1 with `hr`; one noise stream per profile.
inline std::vector<LoadProfile> make_lr_set(const std::vector<LoadProfile>& hr, int alpha,
                                            double noise_var, std::uint64_t seed) {
  std::vector<LoadProfile> lr;
  lr.reserve(hr.size());
  for (std::size_t i = 0; i < hr.size(); ++i) {
    Rng rng(derive_seed(seed, {kStreamNoise, static_cast<std::uint64_t>(i)}));
    lr.push_back(downsample(hr[i], alpha, noise_var, rng));
  }
  return lr;
}

}  // namespace lpsr
