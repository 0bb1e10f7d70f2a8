#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "userboost/core/error.hpp"
#include "userboost/dissimilarity/loss_value.hpp"

namespace userboost {

struct SoftDtwConfig {
  double gamma = 0.1;

  void validate() const {
    if (!(gamma > 0.0)) throw UsageError("soft_dtw: gamma must be > 0");
  }
};

namespace detail {

template <typename T>
T softmin3(T a, T b, T c, T gamma) {
  const T m = std::min({a, b, c});
  if (m == std::numeric_limits<T>::infinity()) return m;
  const T s = std::exp(-(a - m) / gamma) + std::exp(-(b - m) / gamma) + std::exp(-(c - m) / gamma);
  return m - gamma * std::log(s);
}

}  // namespace detail

// Smoothed DTW of two single-channel series (squared cost). Writes the
// gradient with respect to `y` into `grad_y` when it is non-empty.
template <typename T>
T soft_dtw_series(std::span<const T> x, std::span<const T> y, T gamma, std::span<T> grad_y = {}) {
  if (!(gamma > T(0))) throw UsageError("soft_dtw: gamma must be > 0");
  const std::size_t m = x.size();
  const std::size_t n = y.size();
  if (m == 0 || n == 0) throw UsageError("soft_dtw: empty series");
  const T inf = std::numeric_limits<T>::infinity();
  const std::size_t stride = n + 2;
  // R and D are (m + 2) x (n + 2) with a border of width one on each side.
  std::vector<T> r((m + 2) * stride, inf);
  std::vector<T> d((m + 2) * stride, T(0));
  auto at = [stride](std::size_t i, std::size_t j) { return i * stride + j; };
  r[at(0, 0)] = T(0);
  for (std::size_t i = 1; i <= m; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      const T diff = x[i - 1] - y[j - 1];
      d[at(i, j)] = diff * diff;
      r[at(i, j)] = d[at(i, j)] +
                    detail::softmin3(r[at(i - 1, j - 1)], r[at(i - 1, j)], r[at(i, j - 1)], gamma);
    }
  }
  const T value = r[at(m, n)];
  if (grad_y.empty()) return value;
  if (grad_y.size() != n) throw UsageError("soft_dtw: gradient buffer length mismatch");

  // Expected alignment matrix by the backward recursion.
  std::vector<T> e((m + 2) * stride, T(0));
  for (std::size_t i = 1; i <= m + 1; ++i) r[at(i, n + 1)] = -inf;
  for (std::size_t j = 1; j <= n + 1; ++j) r[at(m + 1, j)] = -inf;
  r[at(m + 1, n + 1)] = value;
  e[at(m + 1, n + 1)] = T(1);
  for (std::size_t j = n; j >= 1; --j) {
    for (std::size_t i = m; i >= 1; --i) {
      const T rij = r[at(i, j)];
      const T a = std::exp((r[at(i + 1, j)] - rij - d[at(i + 1, j)]) / gamma);
      const T b = std::exp((r[at(i, j + 1)] - rij - d[at(i, j + 1)]) / gamma);
      const T c = std::exp((r[at(i + 1, j + 1)] - rij - d[at(i + 1, j + 1)]) / gamma);
      e[at(i, j)] = e[at(i + 1, j)] * a + e[at(i, j + 1)] * b + e[at(i + 1, j + 1)] * c;
    }
  }
  for (std::size_t j = 1; j <= n; ++j) {
    T g = 0;
    for (std::size_t i = 1; i <= m; ++i) g += e[at(i, j)] * T(2) * (y[j - 1] - x[i - 1]);
    grad_y[j - 1] = g;
  }
  return value;
}

// Channel-separable Soft-DTW: the sum over channels of the per-channel value.
template <typename T>
LossValue<T> soft_dtw(const Matrix<T>& x, const Matrix<T>& y, const SoftDtwConfig& cfg = {}) {
  cfg.validate();
  require_same_shape(x, y, "soft_dtw");
  LossValue<T> out{T(0), Matrix<T>(y.rows(), y.cols())};
  std::vector<T> grad(y.rows());
  for (std::size_t c = 0; c < y.cols(); ++c) {
    const auto xc = x.column(c);
    const auto yc = y.column(c);
    out.value += soft_dtw_series<T>(xc, yc, static_cast<T>(cfg.gamma), grad);
    out.gradient.set_column(c, grad);
  }
  return out;
}

}  // namespace userboost
