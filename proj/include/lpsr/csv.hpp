#pragma once

// CSV import/export for profiles and weather.
//
// Profile schema:  household_id,day,period_min,t0,t1,...   one row per
// household-day. Weather schema:  day,period_min,channel,v0,v1,...   one row
// per (day, channel). Values are written with shortest-round-trip formatting,
// so save/load is lossless.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "lpsr/data.hpp"

namespace lpsr {

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& tok, std::size_t row, std::size_t col) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last || !std::isfinite(v)) {
    throw std::runtime_error("csv row " + std::to_string(row) + ", column " + std::to_string(col + 1) +
                             ": missing or invalid value '" + tok + "'");
  }
  return v;
}

inline long parse_long(const std::string& tok, std::size_t row, std::size_t col) {
  long v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
    throw std::runtime_error("csv row " + std::to_string(row) + ", column " + std::to_string(col + 1) +
                             ": invalid integer '" + tok + "'");
  }
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

inline void save_profiles_csv(const std::string& path, const std::vector<LoadProfile>& profiles) {
  if (profiles.empty()) throw std::invalid_argument("save_profiles_csv: nothing to write");
  const std::size_t n = profiles[0].size();
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_profiles_csv: cannot open " + path);
  f << "household_id,day,period_min";
  for (std::size_t i = 0; i < n; ++i) f << ",t" << i;
  f << "\n";
  for (const auto& p : profiles) {
    if (p.size() != n) {
      throw std::invalid_argument("save_profiles_csv: mixed profile lengths in one file");
    }
    f << p.household_id << "," << p.day << "," << p.period_min;
    for (double v : p.values_kw) f << "," << detail::format_double(v);
    f << "\n";
  }
}

struct ProfileLoadResult {
  std::vector<LoadProfile> profiles;
  std::vector<std::size_t> flagged;  // peak above `peak_flag_multiple` times the corpus median peak
};

/// Loads daily profiles. Rows with missing/invalid cells, wrong sample
/// counts, duplicate or non-monotonic days are rejected with their row
/// number. When target_period_min exceeds the file period, values are
/// block-mean downsampled on ingest.
inline ProfileLoadResult load_profiles_csv(const std::string& path, int target_period_min = 0,
                                           double peak_flag_multiple = 10.0) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_profiles_csv: cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("load_profiles_csv: empty file " + path);
  const auto header = detail::split_csv_line(line);
  if (header.size() < 4 || header[0] != "household_id" || header[1] != "day" ||
      header[2] != "period_min") {
    throw std::runtime_error("load_profiles_csv: header must start with household_id,day,period_min");
  }
  const std::size_t n_cols = header.size() - 3;

  ProfileLoadResult out;
  std::map<std::string, long> last_day;
  std::size_t row = 1;
  while (std::getline(f, line)) {
    ++row;
    if (line.empty()) continue;
    const auto tok = detail::split_csv_line(line);
    if (tok.size() != header.size()) {
      throw std::runtime_error("csv row " + std::to_string(row) + ": expected " +
                               std::to_string(n_cols) + " samples but found " +
                               std::to_string(tok.size() >= 3 ? tok.size() - 3 : 0) +
                               " (gap in the interval sequence)");
    }
    LoadProfile p;
    p.household_id = tok[0];
    const long day = detail::parse_long(tok[1], row, 1);
    const long period = detail::parse_long(tok[2], row, 2);
    if (period < 1 || static_cast<long>(n_cols) * period != kMinutesPerDay) {
      throw std::runtime_error("csv row " + std::to_string(row) + ": " + std::to_string(n_cols) +
                               " samples at " + std::to_string(period) +
                               " min do not cover one day");
    }
    auto it = last_day.find(p.household_id);
    if (it != last_day.end() && day <= it->second) {
      throw std::runtime_error("csv row " + std::to_string(row) + ": non-monotonic day " +
                               std::to_string(day) + " for household " + p.household_id);
    }
    last_day[p.household_id] = day;
    p.day = static_cast<int>(day);
    p.period_min = static_cast<int>(period);
    p.values_kw.resize(n_cols);
    for (std::size_t i = 0; i < n_cols; ++i) {
      const double v = detail::parse_double(tok[3 + i], row, 3 + i);
      if (v < 0.0) {
        throw std::runtime_error("csv row " + std::to_string(row) + ", column " +
                                 std::to_string(4 + i) + ": negative load value");
      }
      p.values_kw[i] = v;
    }
    if (target_period_min > p.period_min) {
      if (target_period_min % p.period_min != 0) {
        throw std::runtime_error("csv row " + std::to_string(row) + ": cannot resample period " +
                                 std::to_string(p.period_min) + " to " +
                                 std::to_string(target_period_min));
      }
      p.values_kw = block_mean(p.values_kw, target_period_min / p.period_min);
      p.period_min = target_period_min;
    } else if (target_period_min != 0 && target_period_min != p.period_min) {
      throw std::runtime_error("csv row " + std::to_string(row) + ": file period " +
                               std::to_string(p.period_min) + " is coarser than requested " +
                               std::to_string(target_period_min));
    }
    out.profiles.push_back(std::move(p));
  }
  if (out.profiles.empty()) throw std::runtime_error("load_profiles_csv: no data rows in " + path);

  // Flag (not reject) days with peaks far above the corpus median peak.
  std::vector<double> peaks;
  peaks.reserve(out.profiles.size());
  for (const auto& p : out.profiles) {
    double mx = 0.0;
    for (double v : p.values_kw) mx = std::max(mx, v);
    peaks.push_back(mx);
  }
  std::vector<double> sorted = peaks;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[sorted.size() / 2];
  if (median > 0.0) {
    for (std::size_t i = 0; i < peaks.size(); ++i) {
      if (peaks[i] > peak_flag_multiple * median) out.flagged.push_back(i);
    }
  }
  return out;
}

inline void save_weather_csv(const std::string& path, const std::vector<WeatherTrack>& tracks) {
  if (tracks.empty()) throw std::invalid_argument("save_weather_csv: nothing to write");
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_weather_csv: cannot open " + path);
  const std::size_t n = tracks[0].channels.empty() ? 0 : tracks[0].channels[0].size();
  f << "day,period_min,channel";
  for (std::size_t i = 0; i < n; ++i) f << ",v" << i;
  f << "\n";
  for (const auto& t : tracks) {
    for (std::size_t c = 0; c < t.channels.size(); ++c) {
      if (t.channels[c].size() != n) {
        throw std::invalid_argument("save_weather_csv: mixed channel lengths in one file");
      }
      f << t.day << "," << t.period_min << "," << t.names[c];
      for (double v : t.channels[c]) f << "," << detail::format_double(v);
      f << "\n";
    }
  }
}

inline std::vector<WeatherTrack> load_weather_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_weather_csv: cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("load_weather_csv: empty file " + path);
  const auto header = detail::split_csv_line(line);
  if (header.size() < 4 || header[0] != "day" || header[1] != "period_min" || header[2] != "channel") {
    throw std::runtime_error("load_weather_csv: header must start with day,period_min,channel");
  }
  const std::size_t n_cols = header.size() - 3;

  std::map<int, WeatherTrack> by_day;
  std::size_t row = 1;
  while (std::getline(f, line)) {
    ++row;
    if (line.empty()) continue;
    const auto tok = detail::split_csv_line(line);
    if (tok.size() != header.size()) {
      throw std::runtime_error("csv row " + std::to_string(row) + ": expected " +
                               std::to_string(n_cols) + " samples per channel row");
    }
    const int day = static_cast<int>(detail::parse_long(tok[0], row, 0));
    const int period = static_cast<int>(detail::parse_long(tok[1], row, 1));
    auto& t = by_day[day];
    if (t.channels.empty()) {
      t.day = day;
      t.period_min = period;
    } else if (t.period_min != period) {
      throw std::runtime_error("csv row " + std::to_string(row) + ": inconsistent period for day " +
                               std::to_string(day));
    }
    std::vector<double> vals(n_cols);
    for (std::size_t i = 0; i < n_cols; ++i) vals[i] = detail::parse_double(tok[3 + i], row, 3 + i);
    t.names.push_back(tok[2]);
    t.channels.push_back(std::move(vals));
  }
  std::vector<WeatherTrack> out;
  out.reserve(by_day.size());
  for (auto& [day, t] : by_day) out.push_back(std::move(t));
  return out;
}

}  // namespace lpsr
