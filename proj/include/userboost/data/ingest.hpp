#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "userboost/data/gesture.hpp"

namespace userboost {

enum class Sensor { accelerometer, gyroscope };

inline std::string_view to_string(Sensor s) {
  return s == Sensor::accelerometer ? "accelerometer" : "gyroscope";
}

inline Sensor parse_sensor(std::string_view text) {
  if (text == "accelerometer" || text == "acc") return Sensor::accelerometer;
  if (text == "gyroscope" || text == "gyro") return Sensor::gyroscope;
  throw DataError("unknown sensor '" + std::string(text) + "'");
}

// One reading of one sensor. For gestures `t` is seconds relative to NFC
// contact; for non-gesture streams it is any monotone clock in seconds and
// `gesture_id` identifies the stream.
struct RawRow {
  int user_id = 0;
  std::optional<int> terminal_id;
  Label label = Label::gesture;
  long gesture_id = 0;
  double t = 0.0;
  Sensor sensor = Sensor::accelerometer;
  double x = 0.0, y = 0.0, z = 0.0;
};

namespace detail {

struct Sample {
  double t;
  std::array<double, 3> xyz;
};

// Index of the sample nearest to `t`; ties go to the earlier sample.
inline std::size_t nearest_sample(const std::vector<Sample>& samples, double t) {
  auto it = std::lower_bound(samples.begin(), samples.end(), t,
                             [](const Sample& s, double v) { return s.t < v; });
  if (it == samples.begin()) return 0;
  if (it == samples.end()) return samples.size() - 1;
  const std::size_t hi = static_cast<std::size_t>(it - samples.begin());
  const std::size_t lo = hi - 1;
  return (t - samples[lo].t) <= (samples[hi].t - t) ? lo : hi;
}

inline constexpr double kGridTolerance = 0.5 * kSamplePeriod + 1e-9;

inline Matrix<double> sample_grid(const std::vector<Sample>& acc, const std::vector<Sample>& gyro,
                                  double start, std::size_t steps) {
  Matrix<double> values(steps, kChannels);
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = start + static_cast<double>(k) * kSamplePeriod;
    const auto& a = acc[nearest_sample(acc, t)].xyz;
    const auto& g = gyro[nearest_sample(gyro, t)].xyz;
    for (std::size_t c = 0; c < 3; ++c) {
      values(k, c) = a[c];
      values(k, 3 + c) = g[c];
    }
  }
  return values;
}

}  // namespace detail

// Groups raw rows by (user, label, gesture id), snaps both sensors onto a
// 50 Hz grid by nearest timestamp, slices gestures to the 4 s before contact
// and partitions non-gesture streams into non-overlapping 4 s windows.
// order_index is the rank of the gesture id within (user, label).
inline Dataset ingest(std::span<const RawRow> rows) {
  using Key = std::tuple<int, int, long>;  // user, label, gesture id
  struct Group {
    std::optional<int> terminal_id;
    std::vector<detail::Sample> acc, gyro;
  };
  std::map<Key, Group> groups;
  for (const auto& r : rows) {
    if (!std::isfinite(r.t) || !std::isfinite(r.x) || !std::isfinite(r.y) || !std::isfinite(r.z)) {
      throw DataError("ingest: non-finite reading in gesture " + std::to_string(r.gesture_id));
    }
    auto& g = groups[{r.user_id, static_cast<int>(r.label), r.gesture_id}];
    if (r.terminal_id) g.terminal_id = r.terminal_id;
    auto& dst = r.sensor == Sensor::accelerometer ? g.acc : g.gyro;
    dst.push_back({r.t, {r.x, r.y, r.z}});
  }

  std::vector<long> missing_sensor, short_history;
  Dataset out;
  std::map<std::pair<int, int>, int> next_order;
  for (auto& [key, g] : groups) {
    const auto [user, label_int, gid] = key;
    const Label label = static_cast<Label>(label_int);
    if (g.acc.empty() || g.gyro.empty()) {
      missing_sensor.push_back(gid);
      continue;
    }
    auto by_time = [](const detail::Sample& a, const detail::Sample& b) { return a.t < b.t; };
    std::stable_sort(g.acc.begin(), g.acc.end(), by_time);
    std::stable_sort(g.gyro.begin(), g.gyro.end(), by_time);

    auto emit = [&](Matrix<double> values) {
      GestureWindow w;
      w.values = std::move(values);
      w.user_id = user;
      w.label = label;
      w.terminal_id = label == Label::gesture ? g.terminal_id : std::nullopt;
      w.order_index = next_order[{user, label_int}]++;
      out.windows.push_back(std::move(w));
    };

    if (label == Label::gesture) {
      const double start = -kWindowSeconds;
      const double last = start + (kWindowLength - 1) * kSamplePeriod;
      const bool covered = g.acc.front().t <= start + detail::kGridTolerance &&
                           g.gyro.front().t <= start + detail::kGridTolerance &&
                           g.acc.back().t >= last - detail::kGridTolerance &&
                           g.gyro.back().t >= last - detail::kGridTolerance;
      if (!covered) {
        short_history.push_back(gid);
        continue;
      }
      emit(detail::sample_grid(g.acc, g.gyro, start, kWindowLength));
    } else {
      const double start = std::max(g.acc.front().t, g.gyro.front().t);
      const double end = std::min(g.acc.back().t, g.gyro.back().t);
      if (end < start) continue;
      const auto steps = static_cast<std::size_t>(std::floor((end - start) / kSamplePeriod + 1e-6)) + 1;
      for (std::size_t w = 0; w + 1 <= steps / kWindowLength; ++w) {
        emit(detail::sample_grid(g.acc, g.gyro,
                                 start + static_cast<double>(w * kWindowLength) * kSamplePeriod,
                                 kWindowLength));
      }
    }
  }

  auto list = [](const std::vector<long>& ids) {
    std::string s;
    for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? ", " : "") + std::to_string(ids[i]);
    return s;
  };
  if (!missing_sensor.empty()) {
    throw DataError("ingest: missing accelerometer or gyroscope channel for gesture ids: " +
                    list(missing_sensor));
  }
  if (!short_history.empty()) {
    throw DataError("ingest: less than 4 s of data before contact for gesture ids: " +
                    list(short_history));
  }
  return out;
}

// Expands canonical windows back into raw rows (gesture id = order index,
// t on the canonical grid ending just before contact).
inline std::vector<RawRow> to_raw_rows(std::span<const GestureWindow> windows) {
  std::vector<RawRow> rows;
  rows.reserve(windows.size() * kWindowLength * 2);
  for (const auto& w : windows) {
    for (std::size_t k = 0; k < w.values.rows(); ++k) {
      const double t = -kWindowSeconds + static_cast<double>(k) * kSamplePeriod;
      for (Sensor s : {Sensor::accelerometer, Sensor::gyroscope}) {
        const std::size_t c0 = s == Sensor::accelerometer ? 0 : 3;
        rows.push_back({w.user_id, w.terminal_id, w.label, w.order_index, t, s,
                        w.values(k, c0), w.values(k, c0 + 1), w.values(k, c0 + 2)});
      }
    }
  }
  return rows;
}

}  // namespace userboost
