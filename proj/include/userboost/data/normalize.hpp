#pragma once

#include <cmath>
#include <span>
#include <string>

#include "userboost/data/gesture.hpp"

namespace userboost {

// Per-channel population mean and standard deviation over every timestep of
// the given (training-partition) windows.
inline ChannelStats compute_channel_stats(std::span<const GestureWindow* const> windows) {
  if (windows.empty()) throw DataError("compute_channel_stats: no windows");
  ChannelStats stats;
  double count = 0;
  std::array<double, kChannels> sum{};
  for (const auto* w : windows) {
    for (std::size_t t = 0; t < w->values.rows(); ++t) {
      for (std::size_t c = 0; c < kChannels; ++c) sum[c] += w->values(t, c);
    }
    count += static_cast<double>(w->values.rows());
  }
  for (std::size_t c = 0; c < kChannels; ++c) stats.mean[c] = sum[c] / count;
  std::array<double, kChannels> sq{};
  for (const auto* w : windows) {
    for (std::size_t t = 0; t < w->values.rows(); ++t) {
      for (std::size_t c = 0; c < kChannels; ++c) {
        const double d = w->values(t, c) - stats.mean[c];
        sq[c] += d * d;
      }
    }
  }
  for (std::size_t c = 0; c < kChannels; ++c) stats.stddev[c] = std::sqrt(sq[c] / count);
  return stats;
}

inline void check_stats(const ChannelStats& stats) {
  for (std::size_t c = 0; c < kChannels; ++c) {
    if (!(stats.stddev[c] > 0.0) || !std::isfinite(stats.stddev[c])) {
      throw DataError("channel " + std::string(kChannelNames[c]) +
                      " has zero variance in the training partition");
    }
  }
}

inline Matrix<double> normalize_values(const Matrix<double>& values, const ChannelStats& stats) {
  check_stats(stats);
  Matrix<double> out = values;
  for (std::size_t t = 0; t < out.rows(); ++t) {
    for (std::size_t c = 0; c < out.cols(); ++c) {
      out(t, c) = (out(t, c) - stats.mean[c]) / stats.stddev[c];
    }
  }
  return out;
}

inline Matrix<double> denormalize_values(const Matrix<double>& values, const ChannelStats& stats) {
  Matrix<double> out = values;
  for (std::size_t t = 0; t < out.rows(); ++t) {
    for (std::size_t c = 0; c < out.cols(); ++c) {
      out(t, c) = out(t, c) * stats.stddev[c] + stats.mean[c];
    }
  }
  return out;
}

// Applies the dataset's stored statistics to every window. The statistics are
// kept on the result for the inverse transform.
inline Dataset normalize(const Dataset& dataset) {
  if (!dataset.stats) throw DataError("normalize: dataset has no channel statistics");
  Dataset out = dataset;
  for (auto& w : out.windows) w.values = normalize_values(w.values, *dataset.stats);
  return out;
}

}  // namespace userboost
