#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "userboost/core/error.hpp"
#include "userboost/core/matrix.hpp"
#include "userboost/core/random.hpp"
#include "userboost/io/binary.hpp"

namespace userboost {

struct ForestConfig {
  std::size_t n_trees = 100;
  double positive_weight = 4.0;  // bootstrap weight of positives relative to negatives
  std::size_t max_features = 0;  // 0: ceil(sqrt(feature_count))
  std::size_t min_samples_split = 2;
  unsigned jobs = 1;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0;       // go left when x[feature] <= threshold
  std::int32_t left = -1, right = -1;
  bool positive = false;      // leaf vote

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  bool vote(std::span<const double> x) const {
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
      const auto& n = nodes[i];
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i].positive;
  }

  std::size_t depth() const {
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {  // children always follow parents
      best = std::max(best, d[i]);
      if (nodes[i].feature >= 0) {
        d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
        d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
      }
    }
    return best;
  }

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

struct Forest {
  std::vector<DecisionTree> trees;
  std::size_t feature_count = 0;
  std::uint64_t seed = 0;

  bool fitted() const { return !trees.empty(); }
  friend bool operator==(const Forest&, const Forest&) = default;
};

namespace detail {

class TreeBuilder {
 public:
  TreeBuilder(const Matrix<double>& x, const std::vector<bool>& y, std::size_t max_features, std::size_t min_split, Rng& rng)
      : x_(x), y_(y), max_features_(max_features), min_split_(min_split), rng_(rng) {}

  DecisionTree build(std::vector<std::size_t> sample) {
    DecisionTree tree;
    tree.nodes.emplace_back();
    struct Pending {
      std::size_t node;
      std::vector<std::size_t> sample;
    };
    std::vector<Pending> stack;
    stack.push_back({0, std::move(sample)});
    // Breadth-first so node order is parent-before-child.
    for (std::size_t head = 0; head < stack.size(); ++head) {
      Pending cur = std::move(stack[head]);
      std::size_t pos = 0;
      for (auto i : cur.sample) pos += y_[i] ? 1 : 0;
      const std::size_t n = cur.sample.size();
      TreeNode& leaf = tree.nodes[cur.node];
      leaf.positive = 2 * pos > n;  // ties go to the negative class
      if (pos == 0 || pos == n || n < min_split_) continue;
      const Split s = best_split(cur.sample, pos);
      if (s.feature < 0) continue;
      std::vector<std::size_t> l, r;
      for (auto i : cur.sample) (x_(i, static_cast<std::size_t>(s.feature)) <= s.threshold ? l : r).push_back(i);
      const auto li = static_cast<std::int32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      TreeNode& node = tree.nodes[cur.node];
      node.feature = s.feature;
      node.threshold = s.threshold;
      node.left = li;
      node.right = li + 1;
      stack.push_back({static_cast<std::size_t>(li), std::move(l)});
      stack.push_back({static_cast<std::size_t>(li + 1), std::move(r)});
    }
    return tree;
  }

 private:
  struct Split {
    std::int32_t feature = -1;
    double threshold = 0;
    double impurity = 0;  // n_L * gini_L + n_R * gini_R
  };

  static double weighted_gini(double pos, double n) { return n - (pos * pos + (n - pos) * (n - pos)) / n; }

  // Examines features in random order until max_features non-constant ones
  // have been tried (or all features are exhausted).
  Split best_split(const std::vector<std::size_t>& sample, std::size_t total_pos) {
    const std::size_t d = x_.cols();
    std::vector<std::size_t> features(d);
    std::iota(features.begin(), features.end(), std::size_t{0});
    Split best;
    best.impurity = std::numeric_limits<double>::infinity();
    std::size_t tried = 0;
    std::vector<std::pair<double, bool>> col(sample.size());
    const double n = static_cast<double>(sample.size());
    for (std::size_t k = 0; k < d && tried < max_features_; ++k) {
      std::swap(features[k], features[k + uniform_index(rng_, d - k)]);
      const std::size_t f = features[k];
      for (std::size_t i = 0; i < sample.size(); ++i) col[i] = {x_(sample[i], f), y_[sample[i]]};
      std::sort(col.begin(), col.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      if (col.front().first == col.back().first) continue;
      ++tried;
      double left_pos = 0;
      for (std::size_t i = 0; i + 1 < col.size(); ++i) {
        left_pos += col[i].second ? 1 : 0;
        if (col[i].first == col[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1);
        const double imp = weighted_gini(left_pos, nl) +
                           weighted_gini(static_cast<double>(total_pos) - left_pos, n - nl);
        double thr = col[i].first + 0.5 * (col[i + 1].first - col[i].first);
        if (!(thr < col[i + 1].first)) thr = col[i].first;
        const auto fi = static_cast<std::int32_t>(f);
        const bool better = imp < best.impurity ||
                            (imp == best.impurity && (fi < best.feature || (fi == best.feature && thr < best.threshold)));
        if (better) best = {fi, thr, imp};
      }
    }
    return best;
  }

  const Matrix<double>& x_;
  const std::vector<bool>& y_;
  std::size_t max_features_, min_split_;
  Rng& rng_;
};

// Class-stratified bootstrap: each class contributes a number of draws
// proportional to weight * class size (at least one), drawn with replacement.
inline std::vector<std::size_t> weighted_bootstrap(const std::vector<std::size_t>& pos,
                                                   const std::vector<std::size_t>& neg, double positive_weight,
                                                   Rng& rng) {
  const double n = static_cast<double>(pos.size() + neg.size());
  const double wp = positive_weight * static_cast<double>(pos.size());
  const double wn = static_cast<double>(neg.size());
  const auto n_pos = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n * wp / (wp + wn))));
  const auto n_neg = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n * wn / (wp + wn))));
  std::vector<std::size_t> out;
  out.reserve(n_pos + n_neg);
  for (std::size_t i = 0; i < n_pos; ++i) out.push_back(pos[uniform_index(rng, pos.size())]);
  for (std::size_t i = 0; i < n_neg; ++i) out.push_back(neg[uniform_index(rng, neg.size())]);
  return out;
}

}  // namespace detail

// Rows of `x` are feature vectors; `y` marks the positive (genuine) class.
inline Forest fit_forest(const Matrix<double>& x, const std::vector<bool>& y, std::uint64_t seed,
                         const ForestConfig& cfg = {}) {
  if (x.rows() != y.size()) throw UsageError("fit_forest: feature and label counts differ");
  if (x.cols() == 0) throw UsageError("fit_forest: no features");
  if (cfg.n_trees == 0) throw UsageError("fit_forest: n_trees must be >= 1");
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw DataError("fit_forest: non-finite feature value");
  }
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < y.size(); ++i) (y[i] ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty()) throw DataError("fit_forest: training data must contain both classes");
  const std::size_t mtry =
      cfg.max_features > 0 ? std::min(cfg.max_features, x.cols())
                           : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(x.cols()))));

  Forest forest;
  forest.feature_count = x.cols();
  forest.seed = seed;
  forest.trees.resize(cfg.n_trees);
  auto grow = [&](std::size_t t) {
    Rng rng = make_rng(seed + t);
    auto sample = detail::weighted_bootstrap(pos, neg, cfg.positive_weight, rng);
    detail::TreeBuilder builder(x, y, mtry, std::max<std::size_t>(cfg.min_samples_split, 2), rng);
    forest.trees[t] = builder.build(std::move(sample));
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(cfg.jobs, static_cast<unsigned>(cfg.n_trees)));
  if (jobs == 1) {
    for (std::size_t t = 0; t < cfg.n_trees; ++t) grow(t);
  } else {
    std::vector<std::thread> workers;
    for (unsigned j = 0; j < jobs; ++j) {
      workers.emplace_back([&, j] {
        for (std::size_t t = j; t < cfg.n_trees; t += jobs) grow(t);
      });
    }
    for (auto& w : workers) w.join();
  }
  return forest;
}

inline std::size_t positive_votes(const Forest& forest, std::span<const double> x) {
  if (!forest.fitted()) throw UsageError("predict_proba: forest is not fitted");
  if (x.size() != forest.feature_count) {
    throw UsageError("predict_proba: expected " + std::to_string(forest.feature_count) + " features, got " +
                     std::to_string(x.size()));
  }
  std::size_t votes = 0;
  for (const auto& t : forest.trees) votes += t.vote(x) ? 1 : 0;
  return votes;
}

inline double predict_proba(const Forest& forest, std::span<const double> x) {
  return static_cast<double>(positive_votes(forest, x)) / static_cast<double>(forest.trees.size());
}

inline std::vector<double> predict_proba_all(const Forest& forest, const Matrix<double>& x) {
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_proba(forest, x.row(i));
  return out;
}

inline constexpr char kForestMagic[4] = {'U', 'B', 'R', 'F'};
inline constexpr std::uint32_t kForestFormatVersion = 1;

inline std::vector<unsigned char> serialize_forest(const Forest& f) {
  io::BinaryWriter w;
  w.bytes(kForestMagic, 4);
  w.u32(kForestFormatVersion);
  w.u64(f.feature_count);
  w.u64(f.seed);
  w.u64(f.trees.size());
  for (const auto& t : f.trees) {
    w.u64(t.nodes.size());
    for (const auto& n : t.nodes) {
      w.i32(n.feature);
      w.f64(n.threshold);
      w.i32(n.left);
      w.i32(n.right);
      w.u8(n.positive ? 1 : 0);
    }
  }
  return w.buffer();
}

inline Forest deserialize_forest(std::vector<unsigned char> bytes, const std::string& what = "forest") {
  io::BinaryReader r(std::move(bytes), what);
  char magic[4];
  r.bytes(magic, 4);
  if (std::string(magic, 4) != std::string(kForestMagic, 4)) r.fail("not a forest checkpoint");
  const auto version = r.u32();
  if (version != kForestFormatVersion) r.fail("unsupported forest version " + std::to_string(version));
  Forest f;
  f.feature_count = static_cast<std::size_t>(r.u64());
  f.seed = r.u64();
  f.trees.resize(r.count(8));
  for (auto& t : f.trees) {
    t.nodes.resize(r.count(21));
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      auto& n = t.nodes[i];
      n.feature = r.i32();
      n.threshold = r.f64();
      n.left = r.i32();
      n.right = r.i32();
      n.positive = r.u8() != 0;
      if (n.feature >= 0) {
        const auto sz = static_cast<std::int32_t>(t.nodes.size());
        if (static_cast<std::size_t>(n.feature) >= f.feature_count || n.left <= static_cast<std::int32_t>(i) ||
            n.right <= static_cast<std::int32_t>(i) || n.left >= sz || n.right >= sz) {
          r.fail("corrupt tree node");
        }
      }
    }
    if (t.nodes.empty()) r.fail("empty tree");
  }
  if (!r.at_end()) r.fail("trailing bytes");
  return f;
}

inline void save_forest(const Forest& f, const std::string& path) {
  io::BinaryWriter w;
  const auto b = serialize_forest(f);
  w.bytes(b.data(), b.size());
  w.save(path);
}

inline Forest load_forest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_forest(std::move(buf), path);
}

inline nlohmann::json forest_summary(const Forest& f) {
  nlohmann::json j;
  j["n_trees"] = f.trees.size();
  j["feature_count"] = f.feature_count;
  j["seed"] = f.seed;
  auto& trees = j["trees"] = nlohmann::json::array();
  for (std::size_t t = 0; t < f.trees.size(); ++t) {
    trees.push_back({{"tree", t}, {"depth", f.trees[t].depth()}, {"node_count", f.trees[t].nodes.size()}});
  }
  return j;
}

}  // namespace userboost
