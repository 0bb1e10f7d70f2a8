#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <string_view>
#include <vector>

#include "userboost/core/error.hpp"

namespace userboost {

// The nine differentiable summary statistics used by the feature loss, in
// this fixed order.
inline constexpr std::size_t kSeriesStats = 9;
inline constexpr std::array<std::string_view, kSeriesStats> kSeriesStatNames = {
    "max", "min", "mean", "std", "var", "skew", "kurtosis", "median", "iqr"};

enum SeriesStat : std::size_t { kMax, kMin, kMean, kStd, kVar, kSkew, kKurtosis, kMedian, kIqr };

namespace detail {

// Indices sorted by value, ties by index.
template <typename T>
std::vector<std::size_t> sorted_order(std::span<const T> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  return idx;
}

// Linear-interpolation quantile: position p * (n - 1) in the sorted series.
struct QuantileWeights {
  std::size_t lo_rank, hi_rank;
  double hi_weight;
};

inline QuantileWeights quantile_weights(std::size_t n, double p) {
  const double pos = p * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, n - 1);
  return {lo, hi, pos - static_cast<double>(lo)};
}

}  // namespace detail

// Population moments; skew and excess kurtosis are 0 for a constant series.
// The median of an even-length series is the mean of the two central order
// statistics; the IQR uses linear-interpolation quartiles.
template <typename T>
std::array<T, kSeriesStats> series_stats(std::span<const T> x) {
  const std::size_t n = x.size();
  if (n == 0) throw UsageError("series_stats: empty series");
  std::array<T, kSeriesStats> f{};
  const auto order = detail::sorted_order(x);
  const T nn = static_cast<T>(n);

  std::size_t imax = 0, imin = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (x[i] > x[imax]) imax = i;
    if (x[i] < x[imin]) imin = i;
  }
  f[kMax] = x[imax];
  f[kMin] = x[imin];

  T sum = 0;
  for (T v : x) sum += v;
  const T mean = sum / nn;
  T m2 = 0, m3 = 0, m4 = 0;
  for (T v : x) {
    const T d = v - mean;
    const T d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= nn;
  m3 /= nn;
  m4 /= nn;
  f[kMean] = mean;
  f[kVar] = m2;
  f[kStd] = std::sqrt(m2);
  if (m2 > T(0)) {
    f[kSkew] = m3 / std::pow(m2, T(1.5));
    f[kKurtosis] = m4 / (m2 * m2) - T(3);
  }

  auto quantile = [&](double p) {
    const auto q = detail::quantile_weights(n, p);
    const T w = static_cast<T>(q.hi_weight);
    return (T(1) - w) * x[order[q.lo_rank]] + w * x[order[q.hi_rank]];
  };
  f[kMedian] = quantile(0.5);
  f[kIqr] = quantile(0.75) - quantile(0.25);
  return f;
}

// Vector-Jacobian product: sum_k upstream[k] * d stat_k / d x, using the
// first attaining index for max/min and splitting order-statistic gradients
// between the interpolated ranks.
template <typename T>
void series_stats_vjp(std::span<const T> x, const std::array<T, kSeriesStats>& upstream,
                      std::span<T> grad) {
  const std::size_t n = x.size();
  if (grad.size() != n) throw UsageError("series_stats_vjp: gradient length mismatch");
  const T nn = static_cast<T>(n);
  std::size_t imax = 0, imin = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (x[i] > x[imax]) imax = i;
    if (x[i] < x[imin]) imin = i;
  }
  grad[imax] += upstream[kMax];
  grad[imin] += upstream[kMin];

  T sum = 0;
  for (T v : x) sum += v;
  const T mean = sum / nn;
  T m2 = 0, m3 = 0, m4 = 0;
  for (T v : x) {
    const T d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= nn;
  m3 /= nn;
  m4 /= nn;

  // Coefficients of d_i, d_i^2, d_i^3 and a constant in the per-index gradient.
  T c_const = upstream[kMean] / nn;
  T c1 = 0, c2 = 0, c3 = 0;
  // d m2 / d x_i = 2 d_i / n
  T g_m2 = upstream[kVar];
  if (m2 > T(0)) {
    const T sd = std::sqrt(m2);
    g_m2 += upstream[kStd] / (T(2) * sd);
    // skew = m3 * m2^-1.5 ; kurt = m4 * m2^-2 - 3
    const T m2_15 = std::pow(m2, T(1.5));
    const T g_m3 = upstream[kSkew] / m2_15;
    g_m2 += upstream[kSkew] * (-T(1.5)) * m3 / (m2_15 * m2);
    const T g_m4 = upstream[kKurtosis] / (m2 * m2);
    g_m2 += upstream[kKurtosis] * (-T(2)) * m4 / (m2 * m2 * m2);
    // d m3 / d x_i = 3 (d_i^2 - m2) / n ; d m4 / d x_i = 4 (d_i^3 - m3) / n
    c2 += g_m3 * T(3) / nn;
    c_const -= g_m3 * T(3) * m2 / nn;
    c3 += g_m4 * T(4) / nn;
    c_const -= g_m4 * T(4) * m3 / nn;
  }
  c1 += g_m2 * T(2) / nn;
  for (std::size_t i = 0; i < n; ++i) {
    const T d = x[i] - mean;
    grad[i] += c_const + c1 * d + c2 * d * d + c3 * d * d * d;
  }

  const auto order = detail::sorted_order(x);
  auto quantile_vjp = [&](double p, T up) {
    const auto q = detail::quantile_weights(n, p);
    const T w = static_cast<T>(q.hi_weight);
    grad[order[q.lo_rank]] += up * (T(1) - w);
    grad[order[q.hi_rank]] += up * w;
  };
  quantile_vjp(0.5, upstream[kMedian]);
  quantile_vjp(0.75, upstream[kIqr]);
  quantile_vjp(0.25, -upstream[kIqr]);
}

}  // namespace userboost
