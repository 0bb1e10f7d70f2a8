#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "oracles/stats_oracle.hpp"
#include "userboost/core/random.hpp"
#include "userboost/features/extract.hpp"

using namespace userboost;

namespace {

GestureWindow random_window(Rng& rng) {
  GestureWindow w;
  for (auto& v : w.values.data()) v = standard_normal(rng);
  return w;
}

std::vector<double> norms(const GestureWindow& w, std::size_t c0) {
  std::vector<double> out(w.values.rows());
  for (std::size_t t = 0; t < out.size(); ++t) {
    out[t] = std::sqrt(w.values(t, c0) * w.values(t, c0) + w.values(t, c0 + 1) * w.values(t, c0 + 1) +
                       w.values(t, c0 + 2) * w.values(t, c0 + 2));
  }
  return out;
}

}  // namespace

TEST(PeakCount, Examples) {
  EXPECT_EQ(peak_count(std::vector<double>{0, 1, 0}), 1);
  EXPECT_EQ(peak_count(std::vector<double>{0, 1, 0, 1, 0}), 2);
  EXPECT_EQ(peak_count(std::vector<double>{1, 2, 3, 4}), 0);
  EXPECT_EQ(peak_count(std::vector<double>{4, 3}), 0);
  EXPECT_EQ(peak_count(std::vector<double>{0, 1, 1, 0}), 0);
}

TEST(Extract, NamesAndCount) {
  const auto names = feature_names();
  ASSERT_EQ(names.size(), 80u);
  EXPECT_EQ(names.front(), "ax_max");
  EXPECT_EQ(names[9], "ax_peak_count");
  EXPECT_EQ(names.back(), "gyro_norm_peak_count");
}

TEST(Extract, ConstantZeroWindow) {
  GestureWindow w;
  const auto f = extract(w);
  for (double v : f.values) EXPECT_EQ(v, 0.0);
}

TEST(Extract, RampMeanAndNoPeaks) {
  GestureWindow w;
  const double step = 0.5;
  for (std::size_t t = 0; t < kWindowLength; ++t) w.values(t, 0) = step * static_cast<double>(t + 1);
  const auto f = extract(w);
  EXPECT_NEAR(f.values[kMean], 100.5 * step, 1e-12);
  EXPECT_EQ(f.values[9], 0.0);
}

TEST(Extract, MatchesStraightLineOracle) {
  Rng rng = make_rng(41);
  for (int rep = 0; rep < 20; ++rep) {
    const auto w = random_window(rng);
    const auto f = extract(w);
    for (std::size_t c = 0; c < kFeatureChannels; ++c) {
      const auto series = c < 6 ? w.values.column(c) : norms(w, c == 6 ? 0 : 3);
      const auto ref = oracle::series_stats(series);
      for (std::size_t k = 0; k < 9; ++k) EXPECT_NEAR(f.values[c * 10 + k], ref[k], 1e-10) << c << "," << k;
      EXPECT_EQ(f.values[c * 10 + 9], oracle::peaks(series));
    }
  }
}

TEST(Extract, PermutingTimestepsKeepsOrderFreeFeatures) {
  Rng rng = make_rng(42);
  const auto w = random_window(rng);
  std::vector<std::size_t> perm(kWindowLength);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  GestureWindow p = w;
  for (std::size_t t = 0; t < kWindowLength; ++t) {
    for (std::size_t c = 0; c < kChannels; ++c) p.values(t, c) = w.values(perm[t], c);
  }
  const auto a = extract(w), b = extract(p);
  for (std::size_t c = 0; c < kFeatureChannels; ++c) {
    for (std::size_t k = 0; k < 9; ++k) EXPECT_NEAR(a.values[c * 10 + k], b.values[c * 10 + k], 1e-9);
  }
}

TEST(Extract, ScaleBehaviour) {
  Rng rng = make_rng(43);
  const auto w = random_window(rng);
  GestureWindow s = w;
  const double c = 2.5;
  for (auto& v : s.values.data()) v *= c;
  const auto a = extract(w), b = extract(s);
  for (std::size_t ch = 0; ch < kFeatureChannels; ++ch) {
    const std::size_t base = ch * 10;
    for (std::size_t k : {kMax, kMin, kMean, kStd, kMedian, kIqr}) {
      EXPECT_NEAR(b.values[base + k], c * a.values[base + k], 1e-9);
    }
    EXPECT_NEAR(b.values[base + kVar], c * c * a.values[base + kVar], 1e-9);
    EXPECT_NEAR(b.values[base + kSkew], a.values[base + kSkew], 1e-9);
    EXPECT_NEAR(b.values[base + kKurtosis], a.values[base + kKurtosis], 1e-9);
    EXPECT_EQ(b.values[base + 9], a.values[base + 9]);
  }
}

TEST(Extract, FeatureCsvHeader) {
  Rng rng = make_rng(44);
  const std::vector<GestureWindow> ws{random_window(rng)};
  std::ostringstream os;
  write_feature_csv(os, extract_all(ws));
  const std::string text = os.str();
  EXPECT_NE(text.find("ax_max"), std::string::npos);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
}
