#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "userboost/core/error.hpp"
#include "userboost/core/matrix.hpp"

namespace userboost {

inline constexpr std::size_t kWindowLength = 200;
inline constexpr std::size_t kChannels = 6;
inline constexpr double kSampleRateHz = 50.0;
inline constexpr double kSamplePeriod = 1.0 / kSampleRateHz;
inline constexpr double kWindowSeconds = 4.0;

inline constexpr std::array<std::string_view, kChannels> kChannelNames = {"ax", "ay", "az",
                                                                          "gx", "gy", "gz"};

enum class Label { gesture, non_gesture };

inline std::string_view to_string(Label label) {
  return label == Label::gesture ? "gesture" : "non_gesture";
}

inline Label parse_label(std::string_view text) {
  if (text == "gesture") return Label::gesture;
  if (text == "non_gesture") return Label::non_gesture;
  throw DataError("unknown label '" + std::string(text) + "'");
}

// One 4 s, 50 Hz window: 200 timesteps x (accel xyz [m/s^2], gyro xyz [rad/s]).
struct GestureWindow {
  Matrix<double> values{kWindowLength, kChannels};
  int user_id = 0;
  std::optional<int> terminal_id;
  Label label = Label::gesture;
  int order_index = 0;
  bool synthetic = false;

  friend bool operator==(const GestureWindow&, const GestureWindow&) = default;
};

inline bool all_finite(const Matrix<double>& m) {
  for (double v : m.data()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

inline void validate_window(const GestureWindow& w) {
  if (w.values.rows() != kWindowLength || w.values.cols() != kChannels) {
    throw DataError("window of user " + std::to_string(w.user_id) + " has shape " +
                    std::to_string(w.values.rows()) + "x" + std::to_string(w.values.cols()) +
                    ", expected 200x6");
  }
  if (!all_finite(w.values)) {
    throw DataError("window of user " + std::to_string(w.user_id) + " order " +
                    std::to_string(w.order_index) + " contains non-finite values");
  }
  if (w.terminal_id && (*w.terminal_id < 1 || *w.terminal_id > 7)) {
    throw DataError("terminal id " + std::to_string(*w.terminal_id) + " outside 1..7");
  }
}

struct ChannelStats {
  std::array<double, kChannels> mean{};
  std::array<double, kChannels> stddev{};

  friend bool operator==(const ChannelStats&, const ChannelStats&) = default;
};

struct Dataset {
  std::vector<GestureWindow> windows;
  std::optional<ChannelStats> stats;

  std::vector<const GestureWindow*> select(Label label) const {
    std::vector<const GestureWindow*> out;
    for (const auto& w : windows) {
      if (w.label == label) out.push_back(&w);
    }
    return out;
  }

  std::vector<int> user_ids(Label label = Label::gesture) const {
    std::vector<int> ids;
    for (const auto& w : windows) {
      if (w.label != label) continue;
      bool seen = false;
      for (int id : ids) seen = seen || id == w.user_id;
      if (!seen) ids.push_back(w.user_id);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
  }
};

}  // namespace userboost
