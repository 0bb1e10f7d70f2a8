#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "oracles/butterworth_oracle.hpp"
#include "userboost/core/random.hpp"
#include "userboost/data/csv_io.hpp"
#include "userboost/data/filter.hpp"
#include "userboost/data/ingest.hpp"
#include "userboost/data/mini_dataset.hpp"
#include "userboost/data/normalize.hpp"
#include "userboost/io/dataset_dir.hpp"

using namespace userboost;

namespace {

// Two-sensor rows for one gesture over [t0, t1) at 50 Hz; value = f(t) + channel.
std::vector<RawRow> gesture_rows(int user, long gid, double t0, double t1, Label label = Label::gesture,
                                 double jitter = 0.0, std::uint64_t seed = 0) {
  std::vector<RawRow> rows;
  Rng rng = make_rng(seed);
  const int steps = static_cast<int>(std::lround((t1 - t0) / kSamplePeriod));
  for (Sensor s : {Sensor::accelerometer, Sensor::gyroscope}) {
    for (int k = 0; k < steps; ++k) {
      const double t = t0 + k * kSamplePeriod + (jitter > 0 ? uniform(rng, -jitter, jitter) : 0.0);
      const double base = s == Sensor::accelerometer ? 0.0 : 10.0;
      rows.push_back({user, label == Label::gesture ? std::optional<int>(3) : std::nullopt, label, gid, t, s,
                      base + t, base + 2 * t, base + 3 * t});
    }
  }
  return rows;
}

std::string temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("userboost_test_" + name);
  std::filesystem::remove_all(p);
  return p.string();
}

}  // namespace

TEST(Ingest, SixSecondsOfRowsGiveOneFourSecondWindow) {
  const auto rows = gesture_rows(1, 17, -4.0, 2.0);
  const auto ds = ingest(rows);
  ASSERT_EQ(ds.windows.size(), 1u);
  const auto& w = ds.windows[0];
  EXPECT_EQ(w.values.rows(), 200u);
  EXPECT_EQ(w.values.cols(), 6u);
  EXPECT_EQ(w.terminal_id, 3);
  for (std::size_t k = 0; k < 200; ++k) {
    const double t = -4.0 + 0.02 * static_cast<double>(k);
    EXPECT_NEAR(w.values(k, 0), t, 1e-12);
    EXPECT_NEAR(w.values(k, 5), 10.0 + 3 * t, 1e-12);
  }
}

TEST(Ingest, NearestTimestampSnappingMatchesScan) {
  const auto rows = gesture_rows(2, 5, -4.5, 0.5, Label::gesture, 0.009, 3);
  const auto ds = ingest(rows);
  ASSERT_EQ(ds.windows.size(), 1u);
  std::vector<const RawRow*> acc;
  for (const auto& r : rows) {
    if (r.sensor == Sensor::accelerometer) acc.push_back(&r);
  }
  for (std::size_t k = 0; k < 200; ++k) {
    const double t = -4.0 + 0.02 * static_cast<double>(k);
    const RawRow* best = nullptr;
    for (const auto* r : acc) {
      if (!best || std::abs(r->t - t) < std::abs(best->t - t) ||
          (std::abs(r->t - t) == std::abs(best->t - t) && r->t < best->t)) {
        best = r;
      }
    }
    EXPECT_EQ(ds.windows[0].values(k, 0), best->x);
  }
}

TEST(Ingest, TwelveSecondNonGestureStreamGivesThreeWindows) {
  const auto ds = ingest(gesture_rows(1, 0, 100.0, 112.0, Label::non_gesture));
  ASSERT_EQ(ds.windows.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(ds.windows[i].order_index, static_cast<int>(i));
    EXPECT_FALSE(ds.windows[i].terminal_id.has_value());
    EXPECT_NEAR(ds.windows[i].values(0, 0), 100.0 + 4.0 * static_cast<double>(i), 1e-9);
  }
}

TEST(Ingest, ShortHistoryIsRejectedNamingTheGesture) {
  auto rows = gesture_rows(1, 41, -3.0, 1.0);
  try {
    ingest(rows);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("41"), std::string::npos);
  }
}

TEST(Ingest, MissingSensorIsRejected) {
  auto rows = gesture_rows(1, 8, -4.0, 1.0);
  std::erase_if(rows, [](const RawRow& r) { return r.sensor == Sensor::gyroscope; });
  EXPECT_THROW(ingest(rows), DataError);
}

TEST(Ingest, ReingestingCanonicalFormIsIdempotent) {
  MiniDatasetOptions o;
  o.n_users = 2;
  o.gestures_per_user = 4;
  const auto ds = generate_mini_dataset(o);
  const auto raw = to_raw_rows(ds.windows);
  const auto again = ingest(raw);
  ASSERT_EQ(again.windows.size(), ds.windows.size());
  auto sorted = ds.windows;
  auto key = [](const GestureWindow& a, const GestureWindow& b) {
    return std::tie(a.user_id, a.label, a.order_index) < std::tie(b.user_id, b.label, b.order_index);
  };
  std::sort(sorted.begin(), sorted.end(), key);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i].label == Label::gesture) EXPECT_EQ(again.windows[i], sorted[i]);
  }
}

TEST(RawCsv, RoundTrip) {
  const auto rows = gesture_rows(3, 9, -4.0, 0.0, Label::gesture, 0.004, 8);
  std::stringstream ss;
  write_raw_csv(ss, rows);
  const auto back = read_raw_csv(ss);
  ASSERT_EQ(back.size(), rows.size());
  EXPECT_EQ(ingest(back).windows, ingest(rows).windows);
}

TEST(CanonicalCsv, RoundTripIsBitExact) {
  MiniDatasetOptions o;
  o.n_users = 2;
  o.gestures_per_user = 3;
  auto ds = generate_mini_dataset(o);
  ds.windows[1].synthetic = true;
  std::stringstream ss;
  write_canonical_csv(ss, ds.windows, true);
  EXPECT_EQ(read_canonical_csv(ss), ds.windows);
}

TEST(CanonicalCsv, Errors) {
  std::stringstream bad_header("a,b,c\n");
  EXPECT_THROW(read_canonical_csv(bad_header), DataError);
  std::stringstream short_window(std::string(kCanonicalHeader) + "\n1,1,gesture,0,-4.00,0,0,0,0,0,0\n");
  EXPECT_THROW(read_canonical_csv(short_window), DataError);
  std::stringstream bad_number(std::string(kCanonicalHeader) + "\n1,1,gesture,0,-4.00,x,0,0,0,0,0\n");
  EXPECT_THROW(read_canonical_csv(bad_number), DataError);
}

TEST(DatasetDir, RoundTrip) {
  const auto dir = temp_dir("dsdir");
  auto ds = generate_mini_dataset(2, 3, 5);
  ds.stats = ChannelStats{};
  ds.stats->stddev.fill(2.0);
  io::save_dataset_dir(dir, ds);
  const auto back = io::load_dataset_dir(dir);
  EXPECT_EQ(back.windows, ds.windows);
  EXPECT_EQ(back.stats, ds.stats);
  EXPECT_FALSE(io::is_split_dir(dir));
  std::filesystem::remove_all(dir);
}

TEST(Butterworth, SectionsHaveUnitDcGain) {
  for (int order : {1, 2, 3, 4, 5, 8}) {
    const auto s = butterworth_lowpass({order, 10.0});
    EXPECT_EQ(s.size(), static_cast<std::size_t>((order + 1) / 2));
    for (const auto& q : s) EXPECT_NEAR(q.dc_gain(), 1.0, 1e-12);
  }
}

TEST(Butterworth, InvalidSpecsThrow) {
  EXPECT_THROW(butterworth_lowpass({0, 10.0}), UsageError);
  EXPECT_THROW(butterworth_lowpass({4, 25.0}), UsageError);
  EXPECT_THROW(butterworth_lowpass({4, 0.0}), UsageError);
}

TEST(ZeroPhaseFilter, ConstantPassesThrough) {
  const auto s = butterworth_lowpass({});
  const std::vector<double> c(200, 9.81);
  for (double v : zero_phase_filter(s, c)) EXPECT_NEAR(v, 9.81, 1e-9);
}

TEST(ZeroPhaseFilter, NyquistIsRemoved) {
  const auto s = butterworth_lowpass({});
  std::vector<double> x(200);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = i % 2 ? -1.0 : 1.0;
  EXPECT_NEAR(oracle::butterworth_gain(25.0, 10.0, 50.0, 4), 0.0, 1e-12);
  const auto y = zero_phase_filter(s, x);
  for (std::size_t i = 20; i < 180; ++i) EXPECT_LE(std::abs(y[i]), 0.01) << i;
}

TEST(ZeroPhaseFilter, TwoHertzSineIsPreserved) {
  const auto s = butterworth_lowpass({});
  std::vector<double> x(200);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2 * std::numbers::pi * 2.0 * static_cast<double>(i) / 50.0);
  const auto y = zero_phase_filter(s, x);
  const double g = oracle::butterworth_gain(2.0, 10.0, 50.0, 4);
  for (std::size_t i = 20; i < 180; ++i) {
    EXPECT_LE(std::abs(y[i] - x[i]), 0.05);
    EXPECT_NEAR(y[i], g * g * x[i], 2e-3);
  }
}

TEST(ZeroPhaseFilter, SteadyStateGainMatchesSquaredMagnitude) {
  for (int order : {2, 4, 5}) {
    const auto s = butterworth_lowpass({order, 10.0});
    for (double f : {1.0, 5.0, 10.0, 15.0, 20.0}) {
      const std::size_t n = 2000;
      std::vector<double> x(n);
      for (std::size_t i = 0; i < n; ++i) x[i] = std::cos(2 * std::numbers::pi * f * static_cast<double>(i) / 50.0);
      const auto y = zero_phase_filter(s, x);
      const double g = oracle::butterworth_gain(f, 10.0, 50.0, order);
      for (std::size_t i = 500; i < 1500; ++i) EXPECT_NEAR(y[i], g * g * x[i], 1e-6) << order << " " << f;
    }
  }
}

TEST(ZeroPhaseFilter, CommutesWithTimeReversal) {
  Rng rng = make_rng(51);
  for (int order : {1, 3, 4}) {
    const auto s = butterworth_lowpass({order, 7.5});
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<double> x(200);
      for (auto& v : x) v = standard_normal(rng);
      auto y = zero_phase_filter(s, x);
      std::vector<double> xr(x.rbegin(), x.rend());
      const auto yr = zero_phase_filter(s, xr);
      std::reverse(y.begin(), y.end());
      for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(yr[i], y[i], 1e-12);
    }
  }
}

TEST(ZeroPhaseFilter, NonFiniteInputThrows) {
  GestureWindow w;
  w.values(3, 2) = std::nan("");
  EXPECT_THROW(lowpass_filter(w, {}), DataError);
}

TEST(Normalize, TrainingPartitionHasUnitMoments) {
  const auto ds = generate_mini_dataset(3, 10, 2);
  std::vector<const GestureWindow*> ptrs;
  for (const auto& w : ds.windows) ptrs.push_back(&w);
  const auto stats = compute_channel_stats(ptrs);
  std::vector<GestureWindow> norm;
  for (const auto* w : ptrs) norm.push_back({normalize_values(w->values, stats)});
  std::vector<const GestureWindow*> nptr;
  for (const auto& w : norm) nptr.push_back(&w);
  const auto again = compute_channel_stats(nptr);
  for (std::size_t c = 0; c < kChannels; ++c) {
    EXPECT_NEAR(again.mean[c], 0.0, 1e-6);
    EXPECT_NEAR(again.stddev[c], 1.0, 1e-6);
  }
  Matrix<double> at_mean(1, kChannels);
  for (std::size_t c = 0; c < kChannels; ++c) at_mean(0, c) = stats.mean[c];
  const auto zeroed = normalize_values(at_mean, stats);
  for (double v : zeroed.data()) EXPECT_EQ(v, 0.0);
  const auto round = denormalize_values(normalize_values(ds.windows[0].values, stats), stats);
  for (std::size_t i = 0; i < round.size(); ++i) EXPECT_NEAR(round.data()[i], ds.windows[0].values.data()[i], 1e-12);
}

TEST(Normalize, ConstantChannelIsNamed) {
  std::vector<GestureWindow> ws(2);
  for (auto& w : ws) {
    for (std::size_t t = 0; t < kWindowLength; ++t) {
      for (std::size_t c = 0; c < kChannels; ++c) w.values(t, c) = c == 4 ? 1.0 : static_cast<double>(t);
    }
  }
  std::vector<const GestureWindow*> ptrs{&ws[0], &ws[1]};
  try {
    check_stats(compute_channel_stats(ptrs));
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("gy"), std::string::npos);
  }
}

TEST(Normalize, FilterThenNormalizeIsFinite) {
  const auto ds = generate_mini_dataset(4, 8, 13);
  std::vector<GestureWindow> filtered;
  for (const auto& w : ds.windows) filtered.push_back(lowpass_filter(w, {}));
  std::vector<const GestureWindow*> ptrs;
  for (const auto& w : filtered) ptrs.push_back(&w);
  const auto stats = compute_channel_stats(ptrs);
  for (const auto& w : filtered) EXPECT_TRUE(all_finite(normalize_values(w.values, stats)));
}

TEST(MiniDataset, DeterministicAndSeedSensitive) {
  const auto a = generate_mini_dataset(2, 10, 7), b = generate_mini_dataset(2, 10, 7);
  EXPECT_EQ(a.windows, b.windows);
  const auto c = generate_mini_dataset(2, 10, 8);
  EXPECT_NE(a.windows, c.windows);
}

TEST(MiniDataset, Counting) {
  const auto ds = generate_mini_dataset(16, 60, 1);
  const auto g = ds.select(Label::gesture);
  EXPECT_EQ(g.size(), 960u);
  for (const auto* w : g) {
    EXPECT_EQ(w->values.rows(), 200u);
    EXPECT_EQ(w->values.cols(), 6u);
    ASSERT_TRUE(w->terminal_id.has_value());
    EXPECT_GE(*w->terminal_id, 1);
    EXPECT_LE(*w->terminal_id, 7);
  }
  EXPECT_EQ(ds.select(Label::non_gesture).size(), 16u * 30u);
}

TEST(MiniDataset, InvalidOptionsThrow) {
  EXPECT_THROW(generate_mini_dataset(1, 10, 1), UsageError);
  MiniDatasetOptions o;
  o.variability = -1;
  EXPECT_THROW(generate_mini_dataset(o), UsageError);
}
