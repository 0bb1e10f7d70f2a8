#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "userboost/core/error.hpp"
#include "userboost/data/csv_io.hpp"

namespace userboost {

struct ScoreSet {
  std::vector<double> positive;  // genuine-user scores
  std::vector<double> negative;  // other-user scores
};

// Acceptance rule: score >= T. Thresholds ascend; the last one is +inf.
struct EvalReport {
  std::vector<double> thresholds;
  std::vector<double> far;
  std::vector<double> frr;
  double far_at_zero = 0;
  double eer_low = 0;
  double eer_high = 0;
  double auroc = 0;
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

namespace detail {

inline void require_scores(const ScoreSet& s, const char* where) {
  if (s.positive.empty() || s.negative.empty()) {
    throw UsageError(std::string(where) + ": both score classes must be non-empty");
  }
  for (const auto* v : {&s.positive, &s.negative}) {
    for (double x : *v) {
      if (std::isnan(x)) throw DataError(std::string(where) + ": NaN score");
    }
  }
}

// Number of elements of the sorted range that are >= t.
inline std::size_t count_at_least(const std::vector<double>& sorted, double t) {
  return static_cast<std::size_t>(sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), t));
}

}  // namespace detail

inline double far_at_zero_frr(const EvalReport& r) {
  if (r.thresholds.empty()) throw UsageError("far_at_zero_frr: empty report");
  std::size_t best = 0;
  for (std::size_t i = 0; i < r.frr.size(); ++i) {
    if (r.frr[i] == 0.0) best = i;
  }
  return r.far[best];
}

// When FAR == FRR at some threshold the interval is that single value.
// Otherwise the threshold with the smallest FAR among those with FAR > FRR
// (the largest such threshold) brackets the crossover by its FRR and FAR.
inline std::pair<double, double> eer_interval(const EvalReport& r) {
  if (r.thresholds.empty()) throw UsageError("eer_interval: empty report");
  for (std::size_t i = 0; i < r.far.size(); ++i) {
    if (r.far[i] == r.frr[i]) return {r.far[i], r.far[i]};
  }
  std::size_t star = r.far.size();
  for (std::size_t i = 0; i < r.far.size(); ++i) {
    if (r.far[i] > r.frr[i] && (star == r.far.size() || r.far[i] <= r.far[star])) star = i;
  }
  if (star == r.far.size()) return {r.frr.front(), r.far.front()};
  return {std::min(r.far[star], r.frr[star]), std::max(r.far[star], r.frr[star])};
}

// Probability that a random positive outranks a random negative, ties 1/2.
inline double auroc(const ScoreSet& s) {
  detail::require_scores(s, "auroc");
  std::vector<double> neg = s.negative;
  std::sort(neg.begin(), neg.end());
  double wins = 0;
  for (double p : s.positive) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), p);
    const auto hi = std::upper_bound(lo, neg.end(), p);
    wins += static_cast<double>(lo - neg.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  return wins / (static_cast<double>(s.positive.size()) * static_cast<double>(neg.size()));
}

// Trapezoidal area under the (FAR, 1 - FRR) curve of a sweep.
inline double trapezoid_auroc(const EvalReport& r) {
  double area = 0;
  double prev_x = 1.0, prev_y = 1.0;
  for (std::size_t i = 0; i < r.far.size(); ++i) {
    const double x = r.far[i], y = 1.0 - r.frr[i];
    area += (prev_x - x) * (prev_y + y) * 0.5;
    prev_x = x;
    prev_y = y;
  }
  return area;
}

inline EvalReport sweep(const ScoreSet& s) {
  detail::require_scores(s, "sweep");
  std::vector<double> pos = s.positive, neg = s.negative;
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  EvalReport r;
  r.n_positive = pos.size();
  r.n_negative = neg.size();
  r.thresholds.reserve(pos.size() + neg.size() + 1);
  r.thresholds.insert(r.thresholds.end(), pos.begin(), pos.end());
  r.thresholds.insert(r.thresholds.end(), neg.begin(), neg.end());
  std::sort(r.thresholds.begin(), r.thresholds.end());
  r.thresholds.erase(std::unique(r.thresholds.begin(), r.thresholds.end()), r.thresholds.end());
  if (r.thresholds.back() != std::numeric_limits<double>::infinity()) {
    r.thresholds.push_back(std::numeric_limits<double>::infinity());
  }
  const double np = static_cast<double>(pos.size()), nn = static_cast<double>(neg.size());
  for (double t : r.thresholds) {
    r.far.push_back(static_cast<double>(detail::count_at_least(neg, t)) / nn);
    r.frr.push_back(static_cast<double>(pos.size() - detail::count_at_least(pos, t)) / np);
  }
  r.far_at_zero = far_at_zero_frr(r);
  std::tie(r.eer_low, r.eer_high) = eer_interval(r);
  r.auroc = auroc(s);
  return r;
}

inline EvalReport evaluate(const ScoreSet& s) { return sweep(s); }

inline nlohmann::json threshold_to_json(double t) {
  if (std::isinf(t)) return t > 0 ? "inf" : "-inf";
  return t;
}

inline nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["far_at_zero"] = r.far_at_zero;
  j["eer_low"] = r.eer_low;
  j["eer_high"] = r.eer_high;
  j["auroc"] = r.auroc;
  j["n_positive"] = r.n_positive;
  j["n_negative"] = r.n_negative;
  auto& th = j["thresholds"] = nlohmann::json::array();
  for (double t : r.thresholds) th.push_back(threshold_to_json(t));
  j["far"] = r.far;
  j["frr"] = r.frr;
  return j;
}

inline EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.far_at_zero = j.at("far_at_zero").get<double>();
  r.eer_low = j.at("eer_low").get<double>();
  r.eer_high = j.at("eer_high").get<double>();
  r.auroc = j.at("auroc").get<double>();
  r.n_positive = j.at("n_positive").get<std::size_t>();
  r.n_negative = j.at("n_negative").get<std::size_t>();
  for (const auto& t : j.at("thresholds")) {
    if (t.is_string()) {
      r.thresholds.push_back(t.get<std::string>() == "inf" ? std::numeric_limits<double>::infinity()
                                                           : -std::numeric_limits<double>::infinity());
    } else {
      r.thresholds.push_back(t.get<double>());
    }
  }
  r.far = j.at("far").get<std::vector<double>>();
  r.frr = j.at("frr").get<std::vector<double>>();
  return r;
}

inline void write_report_csv(std::ostream& out, const EvalReport& r) {
  out << "threshold,far,frr\n";
  for (std::size_t i = 0; i < r.thresholds.size(); ++i) {
    out << csv::format_double(r.thresholds[i]) << ',' << csv::format_double(r.far[i]) << ','
        << csv::format_double(r.frr[i]) << '\n';
  }
}

}  // namespace userboost
