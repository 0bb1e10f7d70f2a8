#pragma once

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "userboost/core/error.hpp"

namespace userboost {

// Dynamic time warping with squared pointwise cost: minimum total cost over
// monotone matchings that pair both endpoints and cover every index. With a
// band, only pairs with |i - j| <= band may be matched.
template <typename T>
T dtw(std::span<const T> x, std::span<const T> y, std::optional<std::size_t> band = std::nullopt) {
  const std::size_t m = x.size();
  const std::size_t n = y.size();
  if (m == 0 || n == 0) throw UsageError("dtw: empty series");
  if (band) {
    const std::size_t gap = m > n ? m - n : n - m;
    if (*band < gap) {
      throw UsageError("dtw: band " + std::to_string(*band) +
                       " admits no valid matching for lengths " + std::to_string(m) + " and " +
                       std::to_string(n));
    }
  }
  const T inf = std::numeric_limits<T>::infinity();
  std::vector<T> prev(n + 1, inf), cur(n + 1, inf);
  prev[0] = T(0);
  for (std::size_t i = 1; i <= m; ++i) {
    std::fill(cur.begin(), cur.end(), inf);
    std::size_t lo = 1, hi = n;
    if (band) {
      lo = i > *band + 1 ? i - *band : 1;
      hi = std::min(n, i + *band);
    }
    for (std::size_t j = lo; j <= hi; ++j) {
      const T d = x[i - 1] - y[j - 1];
      const T best = std::min({prev[j - 1], prev[j], cur[j - 1]});
      cur[j] = d * d + best;
    }
    std::swap(prev, cur);
  }
  return prev[n];
}

template <typename T>
T dtw(const std::vector<T>& x, const std::vector<T>& y,
      std::optional<std::size_t> band = std::nullopt) {
  return dtw<T>(std::span<const T>(x), std::span<const T>(y), band);
}

}  // namespace userboost
