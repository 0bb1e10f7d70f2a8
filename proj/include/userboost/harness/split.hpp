#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "userboost/core/random.hpp"
#include "userboost/data/gesture.hpp"

namespace userboost {

struct SplitSpec {
  double train_fraction = 2.0 / 3.0;
  double validation_fraction = 0.2;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw UsageError("SplitSpec: train_fraction must lie in (0, 1)");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
      throw UsageError("SplitSpec: validation_fraction must lie in (0, 1)");
    }
  }
};

// Train pool = train + validation. Validation holds gestures only.
struct SplitResult {
  Dataset train, validation, test;

  std::vector<const GestureWindow*> pool(Label label) const {
    std::vector<const GestureWindow*> out;
    for (const auto* part : {&train, &validation}) {
      for (const auto& w : part->windows) {
        if (w.label == label) out.push_back(&w);
      }
    }
    std::sort(out.begin(), out.end(), [](const GestureWindow* a, const GestureWindow* b) {
      return std::tie(a->user_id, a->order_index) < std::tie(b->user_id, b->order_index);
    });
    return out;
  }

  std::vector<int> user_ids() const {
    std::set<int> ids;
    for (const auto* part : {&train, &validation, &test}) {
      for (const auto& w : part->windows) ids.insert(w.user_id);
    }
    return {ids.begin(), ids.end()};
  }
};

using WindowKey = std::tuple<int, Label, int>;  // user, label, order_index

inline WindowKey key_of(const GestureWindow& w) { return {w.user_id, w.label, w.order_index}; }

inline std::size_t train_count(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction + 1e-9));
}

// Per (user, label) chronological split; the earliest train_fraction of each
// group forms the train pool, and a seeded random validation_fraction of the
// pooled training gestures becomes the validation set.
inline SplitResult temporal_split(const Dataset& dataset, const SplitSpec& spec) {
  spec.validate();
  std::map<std::pair<int, Label>, std::vector<const GestureWindow*>> groups;
  for (const auto& w : dataset.windows) {
    if (w.synthetic) throw DataError("temporal_split: synthetic window in a real dataset");
    groups[{w.user_id, w.label}].push_back(&w);
  }
  std::vector<const GestureWindow*> pool_gestures;
  SplitResult out;
  for (auto& [key, windows] : groups) {
    std::sort(windows.begin(), windows.end(),
              [](const GestureWindow* a, const GestureWindow* b) { return a->order_index < b->order_index; });
    for (std::size_t i = 1; i < windows.size(); ++i) {
      if (windows[i]->order_index == windows[i - 1]->order_index) {
        throw DataError("temporal_split: duplicate order_index " + std::to_string(windows[i]->order_index) +
                        " for user " + std::to_string(key.first));
      }
    }
    if (key.second == Label::gesture && windows.size() < 3) {
      throw DataError("temporal_split: user " + std::to_string(key.first) + " has only " +
                      std::to_string(windows.size()) + " gestures (need at least 3)");
    }
    const std::size_t n_train = train_count(windows.size(), spec.train_fraction);
    for (std::size_t i = 0; i < windows.size(); ++i) {
      if (i >= n_train) {
        out.test.windows.push_back(*windows[i]);
      } else if (key.second == Label::gesture) {
        pool_gestures.push_back(windows[i]);
      } else {
        out.train.windows.push_back(*windows[i]);
      }
    }
  }
  std::vector<std::size_t> order(pool_gestures.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(child_seed(spec.seed, 0x5917));
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_val = static_cast<std::size_t>(
      std::llround(spec.validation_fraction * static_cast<double>(pool_gestures.size())));
  if (pool_gestures.size() >= 2) n_val = std::clamp<std::size_t>(n_val, 1, pool_gestures.size() - 1);
  std::vector<bool> is_val(pool_gestures.size(), false);
  for (std::size_t i = 0; i < n_val && i < order.size(); ++i) is_val[order[i]] = true;
  for (std::size_t i = 0; i < pool_gestures.size(); ++i) {
    (is_val[i] ? out.validation : out.train).windows.push_back(*pool_gestures[i]);
  }
  auto by_key = [](const GestureWindow& a, const GestureWindow& b) { return key_of(a) < key_of(b); };
  for (auto* part : {&out.train, &out.validation, &out.test}) std::sort(part->windows.begin(), part->windows.end(), by_key);
  return out;
}

// Throws if any window appears in more than one part.
inline void assert_disjoint(const SplitResult& s) {
  std::set<WindowKey> seen;
  for (const auto* part : {&s.train, &s.validation, &s.test}) {
    for (const auto& w : part->windows) {
      if (!seen.insert(key_of(w)).second) {
        throw DataError("split leak: window (user " + std::to_string(w.user_id) + ", order " +
                        std::to_string(w.order_index) + ") appears twice");
      }
    }
  }
}

}  // namespace userboost
