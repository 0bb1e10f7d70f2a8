#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "userboost/auth/random_forest.hpp"
#include "userboost/core/random.hpp"

using namespace userboost;

namespace {

struct Data {
  Matrix<double> x;
  std::vector<bool> y;
};

// Two Gaussian blobs in `dims` dimensions; the first coordinate separates them.
Data blobs(std::size_t n_pos, std::size_t n_neg, std::size_t dims, double gap, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  Data d{Matrix<double>(n_pos + n_neg, dims), {}};
  for (std::size_t i = 0; i < n_pos + n_neg; ++i) {
    const bool pos = i < n_pos;
    d.y.push_back(pos);
    for (std::size_t k = 0; k < dims; ++k) d.x(i, k) = standard_normal(rng);
    d.x(i, 0) += pos ? gap : -gap;
  }
  return d;
}

}  // namespace

TEST(Forest, TwoPointDataset) {
  Matrix<double> x(2, 3);
  x(0, 0) = 1.0;
  x(1, 0) = -1.0;
  x(0, 1) = x(1, 1) = 5.0;
  const std::vector<bool> y{true, false};
  const auto f = fit_forest(x, y, 3);
  ASSERT_EQ(f.trees.size(), 100u);
  for (const auto& t : f.trees) {
    ASSERT_EQ(t.nodes.size(), 3u);
    EXPECT_EQ(t.nodes[0].feature, 0);
    EXPECT_EQ(t.nodes[0].threshold, 0.0);
  }
  EXPECT_EQ(predict_proba(f, x.row(0)), 1.0);
  EXPECT_EQ(predict_proba(f, x.row(1)), 0.0);
}

TEST(Forest, SeparableTrainingAccuracy) {
  const auto d = blobs(30, 60, 80, 4.0, 5);
  const auto f = fit_forest(d.x, d.y, 11);
  const auto p = predict_proba_all(f, d.x);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i] > 0.5, d.y[i]) << i;
}

TEST(Forest, ProbabilitiesAreDiscreteAndMatchVoteTally) {
  const auto d = blobs(20, 40, 80, 0.5, 6);
  const auto f = fit_forest(d.x, d.y, 12);
  Rng rng = make_rng(13);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> q(80);
    for (auto& v : q) v = 2.0 * standard_normal(rng);
    std::size_t tally = 0;
    for (const auto& t : f.trees) {
      std::size_t i = 0;
      while (t.nodes[i].feature >= 0) {
        const auto& n = t.nodes[i];
        i = static_cast<std::size_t>(q[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
      }
      tally += t.nodes[i].positive ? 1 : 0;
    }
    const double p = predict_proba(f, q);
    EXPECT_EQ(positive_votes(f, q), tally);
    EXPECT_EQ(p, static_cast<double>(tally) / 100.0);
    EXPECT_EQ(std::round(p * 100.0) / 100.0, p);
  }
}

TEST(Forest, DeterministicGivenSeed) {
  auto d = blobs(15, 30, 80, 0.7, 7);
  ForestConfig threaded;
  threaded.jobs = 4;
  const auto a = fit_forest(d.x, d.y, 21);
  EXPECT_EQ(a, fit_forest(d.x, d.y, 21));
  EXPECT_EQ(a, fit_forest(d.x, d.y, 21, threaded));
  EXPECT_NE(a, fit_forest(d.x, d.y, 22));

  // A duplicated training point keeps the fit reproducible.
  Data dup{Matrix<double>(d.x.rows() + 1, d.x.cols()), d.y};
  for (std::size_t i = 0; i < d.x.rows(); ++i) {
    for (std::size_t k = 0; k < d.x.cols(); ++k) dup.x(i, k) = d.x(i, k);
  }
  for (std::size_t k = 0; k < d.x.cols(); ++k) dup.x(d.x.rows(), k) = d.x(0, k);
  dup.y.push_back(d.y[0]);
  EXPECT_EQ(fit_forest(dup.x, dup.y, 21), fit_forest(dup.x, dup.y, 21));
}

TEST(Forest, MonotoneOnOneDimensionalSeparableFeature) {
  Matrix<double> x(40, 1);
  std::vector<bool> y;
  for (std::size_t i = 0; i < 40; ++i) {
    x(i, 0) = static_cast<double>(i);
    y.push_back(i >= 20);
  }
  const auto f = fit_forest(x, y, 31);
  double prev = -1;
  for (double v = -5; v <= 45; v += 0.25) {
    const std::vector<double> q{v};
    const double p = predict_proba(f, q);
    EXPECT_GE(p, prev);
    prev = p;
  }
  EXPECT_EQ(predict_proba(f, std::vector<double>{-5.0}), 0.0);
  EXPECT_EQ(predict_proba(f, std::vector<double>{45.0}), 1.0);
}

TEST(Forest, WeightedBootstrapShares) {
  std::vector<std::size_t> pos{0, 1}, neg{2, 3, 4, 5, 6, 7, 8, 9};
  Rng rng = make_rng(1);
  const auto s = detail::weighted_bootstrap(pos, neg, 4.0, rng);
  ASSERT_EQ(s.size(), 10u);
  // Weighted mass 4*2 : 8 -> five draws each.
  EXPECT_EQ(std::count_if(s.begin(), s.end(), [](std::size_t i) { return i < 2; }), 5);
}

TEST(Forest, SerializationRoundTrip) {
  const auto d = blobs(10, 20, 80, 1.0, 8);
  const auto f = fit_forest(d.x, d.y, 41);
  EXPECT_EQ(deserialize_forest(serialize_forest(f)), f);
  const auto path = (std::filesystem::temp_directory_path() / "userboost_forest_test.bin").string();
  save_forest(f, path);
  EXPECT_EQ(load_forest(path), f);
  std::filesystem::remove(path);
  auto bytes = serialize_forest(f);
  bytes[0] = 'X';
  EXPECT_THROW(deserialize_forest(bytes), DataError);
}

TEST(Forest, Errors) {
  const auto d = blobs(5, 5, 3, 1.0, 9);
  EXPECT_THROW(fit_forest(d.x, std::vector<bool>(10, true), 1), DataError);
  EXPECT_THROW(fit_forest(d.x, std::vector<bool>(4, true), 1), UsageError);
  EXPECT_THROW(predict_proba(Forest{}, std::vector<double>(3)), UsageError);
  const auto f = fit_forest(d.x, d.y, 1);
  EXPECT_THROW(predict_proba(f, std::vector<double>(2)), UsageError);
}
