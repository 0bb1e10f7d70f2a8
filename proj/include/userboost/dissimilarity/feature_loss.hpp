#pragma once

#include <vector>

#include "userboost/dissimilarity/loss_value.hpp"
#include "userboost/dissimilarity/series_stats.hpp"

namespace userboost {

// Squared Euclidean distance between per-channel statistic vectors, summed
// over channels.
template <typename T>
LossValue<T> feature_loss(const Matrix<T>& x, const Matrix<T>& y) {
  require_same_shape(x, y, "feature_loss");
  LossValue<T> out{T(0), Matrix<T>(y.rows(), y.cols())};
  if (y.rows() == 0) return out;
  std::vector<T> grad(y.rows());
  for (std::size_t c = 0; c < y.cols(); ++c) {
    const auto xc = x.column(c);
    const auto yc = y.column(c);
    const auto fx = series_stats<T>(xc);
    const auto fy = series_stats<T>(yc);
    std::array<T, kSeriesStats> upstream{};
    for (std::size_t k = 0; k < kSeriesStats; ++k) {
      const T d = fy[k] - fx[k];
      out.value += d * d;
      upstream[k] = T(2) * d;
    }
    std::fill(grad.begin(), grad.end(), T(0));
    series_stats_vjp<T>(yc, upstream, grad);
    out.gradient.set_column(c, grad);
  }
  return out;
}

}  // namespace userboost
