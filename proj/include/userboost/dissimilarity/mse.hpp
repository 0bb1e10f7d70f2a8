#pragma once

#include "userboost/dissimilarity/loss_value.hpp"

namespace userboost {

// Mean of squared elementwise differences over all timesteps and channels.
template <typename T>
LossValue<T> mse(const Matrix<T>& x, const Matrix<T>& y) {
  require_same_shape(x, y, "mse");
  LossValue<T> out{T(0), Matrix<T>(y.rows(), y.cols())};
  if (x.empty()) return out;
  const T count = static_cast<T>(x.size());
  const auto& xd = x.data();
  const auto& yd = y.data();
  auto& g = out.gradient.data();
  T sum = 0;
  for (std::size_t i = 0; i < xd.size(); ++i) {
    const T d = yd[i] - xd[i];
    sum += d * d;
    g[i] = T(2) * d / count;
  }
  out.value = sum / count;
  return out;
}

}  // namespace userboost
