#pragma once

#include <algorithm>
#include <limits>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

struct Point {
  double t, far, frr;
};

// Every distinct score plus +inf as a candidate threshold; rates by counting.
inline std::vector<Point> sweep(const std::vector<double>& pos, const std::vector<double>& neg) {
  std::set<double> cands(pos.begin(), pos.end());
  cands.insert(neg.begin(), neg.end());
  cands.insert(std::numeric_limits<double>::infinity());
  std::vector<Point> out;
  for (double t : cands) {
    double fa = 0, fr = 0;
    for (double s : neg) fa += s >= t ? 1 : 0;
    for (double s : pos) fr += s < t ? 1 : 0;
    out.push_back({t, fa / static_cast<double>(neg.size()), fr / static_cast<double>(pos.size())});
  }
  return out;
}

// FAR at the largest threshold with no false rejections.
inline double far_at_zero(const std::vector<double>& pos, const std::vector<double>& neg) {
  const auto pts = sweep(pos, neg);
  double t_star = -std::numeric_limits<double>::infinity();
  double far = 1.0;
  for (const auto& p : pts) {
    if (p.frr == 0.0 && p.t > t_star) {
      t_star = p.t;
      far = p.far;
    }
  }
  return far;
}

// Point interval at an exact crossing; otherwise the threshold with the
// smallest FAR still above its FRR, reported as (min, max) of its two rates.
inline std::pair<double, double> eer(const std::vector<double>& pos, const std::vector<double>& neg) {
  const auto pts = sweep(pos, neg);
  for (const auto& p : pts) {
    if (p.far == p.frr) return {p.far, p.far};
  }
  const Point* star = nullptr;
  for (const auto& p : pts) {
    if (p.far > p.frr && (!star || p.far < star->far || (p.far == star->far && p.t > star->t))) star = &p;
  }
  if (!star) return {pts.front().frr, pts.front().far};
  return {std::min(star->far, star->frr), std::max(star->far, star->frr)};
}

inline double auroc_pairs(const std::vector<double>& pos, const std::vector<double>& neg) {
  double wins = 0;
  for (double p : pos) {
    for (double n : neg) wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
  }
  return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

}  // namespace oracle
