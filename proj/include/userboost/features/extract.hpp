#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "userboost/data/gesture.hpp"
#include "userboost/dissimilarity/series_stats.hpp"

namespace userboost {

inline constexpr std::size_t kFeatureChannels = 8;
inline constexpr std::size_t kFeaturesPerChannel = 10;
inline constexpr std::size_t kFeatureCount = kFeatureChannels * kFeaturesPerChannel;

inline constexpr std::array<std::string_view, kFeatureChannels> kFeatureChannelNames = {
    "ax", "ay", "az", "gx", "gy", "gz", "acc_norm", "gyro_norm"};

struct FeatureVector {
  std::array<double, kFeatureCount> values{};
  int user_id = 0;
  Label label = Label::gesture;
};

// Number of strict interior local maxima.
inline int peak_count(std::span<const double> series) {
  if (series.size() < 3) return 0;
  int peaks = 0;
  for (std::size_t i = 1; i + 1 < series.size(); ++i) {
    if (series[i - 1] < series[i] && series[i] > series[i + 1]) ++peaks;
  }
  return peaks;
}

// "ax_max", "ax_min", ..., "gyro_norm_peak_count".
inline std::vector<std::string> feature_names() {
  std::vector<std::string> names;
  names.reserve(kFeatureCount);
  for (auto ch : kFeatureChannelNames) {
    for (auto stat : kSeriesStatNames) names.push_back(std::string(ch) + "_" + std::string(stat));
    names.push_back(std::string(ch) + "_peak_count");
  }
  return names;
}

inline FeatureVector extract(const GestureWindow& window) {
  FeatureVector fv;
  fv.user_id = window.user_id;
  fv.label = window.label;
  const std::size_t n = window.values.rows();
  std::array<std::vector<double>, kFeatureChannels> channels;
  for (std::size_t c = 0; c < kChannels; ++c) channels[c] = window.values.column(c);
  channels[6].resize(n);
  channels[7].resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const auto r = window.values.row(t);
    channels[6][t] = std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]);
    channels[7][t] = std::sqrt(r[3] * r[3] + r[4] * r[4] + r[5] * r[5]);
  }
  for (std::size_t c = 0; c < kFeatureChannels; ++c) {
    const auto stats = series_stats<double>(channels[c]);
    const std::size_t base = c * kFeaturesPerChannel;
    for (std::size_t k = 0; k < kSeriesStats; ++k) fv.values[base + k] = stats[k];
    fv.values[base + kSeriesStats] = static_cast<double>(peak_count(channels[c]));
  }
  return fv;
}

inline std::vector<FeatureVector> extract_all(std::span<const GestureWindow> windows) {
  std::vector<FeatureVector> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(extract(w));
  return out;
}

// Header row of the 80 canonical names preceded by user_id and label.
inline void write_feature_csv(std::ostream& os, std::span<const FeatureVector> rows) {
  os << "user_id,label";
  for (const auto& name : feature_names()) os << ',' << name;
  os << '\n';
  char buf[32];
  for (const auto& fv : rows) {
    os << fv.user_id << ',' << to_string(fv.label);
    for (double v : fv.values) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      os << ',' << buf;
    }
    os << '\n';
  }
}

}  // namespace userboost
