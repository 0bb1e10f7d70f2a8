#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "userboost/core/error.hpp"
#include "userboost/data/gesture.hpp"

namespace userboost {

struct FilterSpec {
  int order = 4;
  double cutoff_hz = 10.0;
  double sample_rate_hz = kSampleRateHz;

  void validate() const {
    if (order < 1) throw UsageError("filter order must be >= 1");
    if (!(cutoff_hz > 0.0 && cutoff_hz < sample_rate_hz / 2.0)) {
      throw UsageError("cutoff " + std::to_string(cutoff_hz) + " Hz must lie in (0, " +
                       std::to_string(sample_rate_hz / 2.0) + ")");
    }
  }
};

// Second-order section, transposed direct form II, a0 == 1.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;

  double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }

  // State for which a constant unit input produces constant output dc_gain().
  std::array<double, 2> steady_state() const {
    const double g = dc_gain();
    const double z2 = b2 - a2 * g;
    const double z1 = b1 - a1 * g + z2;
    return {z1, z2};
  }
};

// Digital Butterworth low-pass as cascaded sections (bilinear transform with
// prewarping). Each section has unit DC gain.
inline std::vector<Biquad> butterworth_lowpass(const FilterSpec& spec) {
  spec.validate();
  const double fs = spec.sample_rate_hz;
  const double warped = 2.0 * fs * std::tan(std::numbers::pi * spec.cutoff_hz / fs);
  const int n = spec.order;

  std::vector<Biquad> sections;
  auto to_z = [fs](std::complex<double> s) { return (2.0 * fs + s) / (2.0 * fs - s); };

  for (int k = 0; k < n / 2; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + n + 1) / (2.0 * n);
    const std::complex<double> pole = to_z(warped * std::polar(1.0, theta));
    Biquad q;
    q.a1 = -2.0 * pole.real();
    q.a2 = std::norm(pole);
    const double g = (1.0 + q.a1 + q.a2) / 4.0;
    q.b0 = g;
    q.b1 = 2.0 * g;
    q.b2 = g;
    sections.push_back(q);
  }
  if (n % 2 == 1) {
    const double pole = to_z(std::complex<double>(-warped, 0.0)).real();
    Biquad q;
    q.a1 = -pole;
    const double g = (1.0 + q.a1) / 2.0;
    q.b0 = g;
    q.b1 = g;
    sections.push_back(q);
  }
  return sections;
}

namespace detail {

// Filters in place, starting every section at the steady state of the first
// sample.
inline void sosfilt_steady(std::span<const Biquad> sections, std::vector<double>& x) {
  if (x.empty()) return;
  double level = x.front();
  for (const auto& s : sections) {
    auto [z1, z2] = s.steady_state();
    z1 *= level;
    z2 *= level;
    for (double& v : x) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
    level *= s.dc_gain();
  }
}

inline std::vector<double> forward_backward(std::span<const Biquad> sections,
                                            std::vector<double> x) {
  sosfilt_steady(sections, x);
  std::reverse(x.begin(), x.end());
  sosfilt_steady(sections, x);
  std::reverse(x.begin(), x.end());
  return x;
}

}  // namespace detail

// Zero-phase filtering of one series. The result is the mean of the
// forward-backward and backward-forward passes over an odd-reflected
// extension, which makes the operator commute exactly with time reversal.
inline std::vector<double> zero_phase_filter(std::span<const Biquad> sections,
                                             std::span<const double> series) {
  const std::size_t n = series.size();
  if (n == 0) return {};
  for (double v : series) {
    if (!std::isfinite(v)) throw DataError("lowpass_filter: non-finite input");
  }
  const std::size_t pad = std::min<std::size_t>(3 * (2 * sections.size() + 1), n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * series[0] - series[i]);
  ext.insert(ext.end(), series.begin(), series.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * series[n - 1] - series[n - 1 - i]);

  const std::vector<double> fb = detail::forward_backward(sections, ext);
  std::vector<double> rev(ext.rbegin(), ext.rend());
  std::vector<double> bf = detail::forward_backward(sections, std::move(rev));
  std::reverse(bf.begin(), bf.end());

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = 0.5 * (fb[pad + i] + bf[pad + i]);
  return out;
}

inline GestureWindow lowpass_filter(const GestureWindow& window, const FilterSpec& spec) {
  if (!all_finite(window.values)) {
    throw DataError("lowpass_filter: non-finite input in window of user " +
                    std::to_string(window.user_id));
  }
  const auto sections = butterworth_lowpass(spec);
  GestureWindow out = window;
  for (std::size_t c = 0; c < window.values.cols(); ++c) {
    const auto col = window.values.column(c);
    out.values.set_column(c, zero_phase_filter(sections, col));
  }
  return out;
}

}  // namespace userboost
