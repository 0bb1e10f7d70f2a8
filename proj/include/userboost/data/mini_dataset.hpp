#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "userboost/core/random.hpp"
#include "userboost/data/gesture.hpp"

namespace userboost {

struct MiniDatasetOptions {
  int n_users = 4;
  int gestures_per_user = 40;
  int non_gestures_per_user = -1;  // < 0: half of gestures_per_user
  std::uint64_t seed = 7;
  double separation = 1.0;  // scale of the user-specific component
  double noise_std = 0.05;  // i.i.d. noise, relative to channel scale
  double variability = 1.0;  // scale of per-gesture jitter and terminal effects
};

namespace detail {

struct Sinusoid {
  double amplitude, frequency_hz, phase;
};

struct CurveParams {
  double offset = 0.0;
  std::vector<Sinusoid> terms;
};

inline CurveParams random_curve(Rng& rng, double scale, int max_terms) {
  CurveParams p;
  const int terms = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(max_terms)));
  for (int k = 0; k < terms; ++k) {
    p.terms.push_back({scale * uniform(rng, 0.3, 1.0), uniform(rng, 0.25, 2.5),
                       uniform(rng, 0.0, 2.0 * std::numbers::pi)});
  }
  return p;
}

inline double eval_curve(const CurveParams& p, double t, double amp_jitter, double phase_jitter) {
  double v = p.offset;
  for (const auto& s : p.terms) {
    v += amp_jitter * s.amplitude *
         std::sin(2.0 * std::numbers::pi * s.frequency_hz * t + s.phase + phase_jitter);
  }
  return v;
}

// Accelerometer channels span a few m/s^2, gyroscope channels about 1 rad/s.
inline constexpr std::array<double, kChannels> kChannelScale = {3.0, 3.0, 3.0, 1.0, 1.0, 1.0};
inline constexpr std::array<double, kChannels> kChannelOffset = {0.0, 0.0, 9.81, 0.0, 0.0, 0.0};

}  // namespace detail

// Desk-scale stand-in for a wrist-gesture corpus: every gesture is a shared
// reach template plus a user-specific smooth curve (at most five random
// sinusoids per channel), a small terminal effect, per-gesture jitter and
// i.i.d. noise. Non-gesture windows come from one shared smoothed noise
// process. Bit-identical for identical options.
inline Dataset generate_mini_dataset(const MiniDatasetOptions& opt) {
  if (opt.n_users < 2) throw UsageError("generate_mini_dataset: n_users must be >= 2");
  if (opt.gestures_per_user < 1) throw UsageError("generate_mini_dataset: gestures_per_user must be >= 1");
  if (!(opt.separation >= 0.0) || !(opt.noise_std >= 0.0) || !(opt.variability >= 0.0)) {
    throw UsageError("generate_mini_dataset: separation, noise_std and variability must be >= 0");
  }
  const int non_gestures =
      opt.non_gestures_per_user < 0 ? opt.gestures_per_user / 2 : opt.non_gestures_per_user;

  Rng shared = make_rng(child_seed(opt.seed, 0));
  std::array<detail::CurveParams, kChannels> reach;
  for (std::size_t c = 0; c < kChannels; ++c) {
    reach[c] = detail::random_curve(shared, detail::kChannelScale[c], 3);
    reach[c].offset = detail::kChannelOffset[c];
  }
  std::array<std::array<double, kChannels>, 7> terminal_offset{};
  for (auto& term : terminal_offset) {
    for (std::size_t c = 0; c < kChannels; ++c) {
      term[c] = 0.2 * opt.variability * detail::kChannelScale[c] * (2.0 * uniform01(shared) - 1.0);
    }
  }

  Dataset ds;
  for (int u = 0; u < opt.n_users; ++u) {
    Rng rng = make_rng(child_seed(opt.seed, static_cast<std::uint64_t>(u) + 1));
    std::array<detail::CurveParams, kChannels> user_curve;
    for (std::size_t c = 0; c < kChannels; ++c) {
      user_curve[c] = detail::random_curve(rng, opt.separation * detail::kChannelScale[c], 5);
      user_curve[c].offset = 0.3 * opt.separation * detail::kChannelScale[c] * standard_normal(rng);
    }

    for (int g = 0; g < opt.gestures_per_user; ++g) {
      GestureWindow w;
      w.user_id = u + 1;
      w.terminal_id = 1 + g % 7;
      w.label = Label::gesture;
      w.order_index = g;
      const auto& term = terminal_offset[static_cast<std::size_t>(g % 7)];
      const double shift = 0.08 * opt.variability * standard_normal(rng);
      for (std::size_t c = 0; c < kChannels; ++c) {
        const double amp = 1.0 + 0.1 * opt.variability * standard_normal(rng);
        const double phase = 0.15 * opt.variability * standard_normal(rng);
        for (std::size_t k = 0; k < kWindowLength; ++k) {
          const double t = static_cast<double>(k) * kSamplePeriod + shift;
          w.values(k, c) = detail::eval_curve(reach[c], t, 1.0, 0.0) +
                           detail::eval_curve(user_curve[c], t, amp, phase) + term[c] +
                           opt.noise_std * detail::kChannelScale[c] * standard_normal(rng);
        }
      }
      ds.windows.push_back(std::move(w));
    }

    for (int g = 0; g < non_gestures; ++g) {
      GestureWindow w;
      w.user_id = u + 1;
      w.label = Label::non_gesture;
      w.order_index = g;
      for (std::size_t c = 0; c < kChannels; ++c) {
        // AR(1) process with slow drift around the resting offset.
        double state = 0.0;
        const double scale = detail::kChannelScale[c];
        for (std::size_t k = 0; k < kWindowLength; ++k) {
          state = 0.95 * state + 0.3 * scale * standard_normal(rng);
          w.values(k, c) = detail::kChannelOffset[c] + state +
                           opt.noise_std * scale * standard_normal(rng);
        }
      }
      ds.windows.push_back(std::move(w));
    }
  }
  return ds;
}

inline Dataset generate_mini_dataset(int n_users, int gestures_per_user, std::uint64_t seed) {
  MiniDatasetOptions opt;
  opt.n_users = n_users;
  opt.gestures_per_user = gestures_per_user;
  opt.seed = seed;
  return generate_mini_dataset(opt);
}

}  // namespace userboost
