#pragma once

#include <algorithm>
#include <array>
#include <span>
#include <string>
#include <vector>

#include "userboost/core/error.hpp"
#include "userboost/dissimilarity/loss_value.hpp"

namespace userboost {

template <typename T>
struct Envelope {
  std::vector<T> upper;
  std::vector<T> lower;
  std::size_t half_width = 0;
};

// Running max/min of x over the window [i - w, i + w] clamped to the series.
template <typename T>
Envelope<T> envelope(std::span<const T> x, std::size_t half_width) {
  if (half_width < 1) throw UsageError("envelope: half_width must be >= 1");
  const std::size_t n = x.size();
  Envelope<T> env{std::vector<T>(n), std::vector<T>(n), half_width};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i > half_width ? i - half_width : 0;
    const std::size_t hi = std::min(n - 1, i + half_width);
    T mx = x[lo], mn = x[lo];
    for (std::size_t j = lo + 1; j <= hi; ++j) {
      mx = std::max(mx, x[j]);
      mn = std::min(mn, x[j]);
    }
    env.upper[i] = mx;
    env.lower[i] = mn;
  }
  return env;
}

// Keogh's bound of y against a precomputed envelope of x. Adds the branch
// gradient, scaled by `weight`, into grad_y when non-empty.
template <typename T>
T keogh_lb_against(const Envelope<T>& env, std::span<const T> y, std::span<T> grad_y = {},
                   T weight = T(1)) {
  if (env.upper.size() != y.size()) {
    throw UsageError("keogh_lb: length mismatch (" + std::to_string(env.upper.size()) + " vs " +
                     std::to_string(y.size()) + ")");
  }
  T sum = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    T d = 0;
    if (y[i] > env.upper[i]) {
      d = y[i] - env.upper[i];
    } else if (y[i] < env.lower[i]) {
      d = y[i] - env.lower[i];
    } else {
      continue;
    }
    sum += d * d;
    if (!grad_y.empty()) grad_y[i] += weight * T(2) * d;
  }
  return sum;
}

template <typename T>
LossValue<T> keogh_lb(std::span<const T> x, std::span<const T> y, std::size_t half_width) {
  if (x.size() != y.size()) {
    throw UsageError("keogh_lb: length mismatch (" + std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()) + ")");
  }
  LossValue<T> out{T(0), Matrix<T>(y.size(), 1)};
  const auto env = envelope(x, half_width);
  out.value = keogh_lb_against<T>(env, y, std::span<T>(out.gradient.data()));
  return out;
}

template <typename T>
LossValue<T> keogh_lb(const std::vector<T>& x, const std::vector<T>& y, std::size_t half_width) {
  return keogh_lb<T>(std::span<const T>(x), std::span<const T>(y), half_width);
}

inline constexpr std::array<std::size_t, 5> kKlbModWidths = {2, 4, 8, 16, 32};
inline constexpr std::array<double, 5> kKlbModWeights = {5, 4, 3, 2, 1};

// KLB-mod: per channel, sum over w = 1..5 of (6 - w) * keogh_lb(x, y, 2^w),
// summed over channels.
template <typename T>
LossValue<T> klb_mod(const Matrix<T>& x, const Matrix<T>& y) {
  require_same_shape(x, y, "klb_mod");
  LossValue<T> out{T(0), Matrix<T>(y.rows(), y.cols())};
  std::vector<T> grad(y.rows());
  for (std::size_t c = 0; c < y.cols(); ++c) {
    const auto xc = x.column(c);
    const auto yc = y.column(c);
    std::fill(grad.begin(), grad.end(), T(0));
    for (std::size_t k = 0; k < kKlbModWidths.size(); ++k) {
      const T weight = static_cast<T>(kKlbModWeights[k]);
      const auto env = envelope<T>(xc, kKlbModWidths[k]);
      out.value += weight * keogh_lb_against<T>(env, yc, grad, weight);
    }
    out.gradient.set_column(c, grad);
  }
  return out;
}

}  // namespace userboost
