#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "userboost/core/random.hpp"
#include "userboost/data/normalize.hpp"
#include "userboost/genmodel/adam.hpp"
#include "userboost/genmodel/model.hpp"
#include "userboost/genmodel/network.hpp"

namespace userboost {

// Conv+GRU encoder with a single sigmoid output, trained with binary
// cross-entropy. Used for gesture / non-gesture recognition.
struct ConvGruConfig {
  double learning_rate = 1e-3;
  int epochs = 40;
  int batch_size = 32;
  std::uint64_t seed = 1;
};

class ConvGruClassifier {
 public:
  explicit ConvGruClassifier(ArchSpec arch = {}) : arch_(arch) {
    arch_.window_length = kWindowLength;
    arch_.channels = kChannels;
    arch_.validate();
    encoder_ = Encoder<float>(layout_, arch_, 1);
  }

  std::size_t parameter_count() const { return layout_.total(); }
  bool fitted() const { return !weights_.empty(); }

  // Returns the mean training loss of each epoch.
  std::vector<double> fit(std::span<const GestureWindow* const> positives,
                          std::span<const GestureWindow* const> negatives, const ConvGruConfig& cfg) {
    if (positives.empty() || negatives.empty()) throw DataError("ConvGruClassifier: both classes must be non-empty");
    std::vector<const GestureWindow*> all(positives.begin(), positives.end());
    all.insert(all.end(), negatives.begin(), negatives.end());
    stats_ = compute_channel_stats(all);
    check_stats(stats_);
    std::vector<Matrix<double>> x;
    for (const auto* w : all) x.push_back(normalize_values(w->values, stats_));
    std::vector<float> y(all.size(), 0.0f);
    std::fill(y.begin(), y.begin() + static_cast<long>(positives.size()), 1.0f);

    weights_ = layout_.initialise<float>(child_seed(cfg.seed, 0xC1A5));
    Adam<float> adam(weights_.size(), {cfg.learning_rate});
    nn::ParamVec<float> grad(weights_.size());
    Rng rng = make_rng(child_seed(cfg.seed, 1));
    std::vector<std::size_t> order(all.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> curve;
    const auto bs = static_cast<std::size_t>(std::max(1, cfg.batch_size));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      double total = 0;
      for (std::size_t start = 0; start < order.size(); start += bs) {
        const std::size_t n = std::min(bs, order.size() - start);
        std::vector<const Matrix<double>*> batch;
        for (std::size_t i = 0; i < n; ++i) batch.push_back(&x[order[start + i]]);
        const auto xb = stack_windows<float>(batch, arch_);
        Encoder<float>::Cache cache;
        const auto logits = encoder_.forward(weights_.data(), xb, n, cache);
        nn::Mat<float> d(static_cast<Eigen::Index>(n), 1);
        for (std::size_t i = 0; i < n; ++i) {
          const float l = logits(static_cast<Eigen::Index>(i), 0);
          const float t = y[order[start + i]];
          // Stable BCE: max(l,0) - l t + log(1 + exp(-|l|)).
          total += std::max(l, 0.0f) - l * t + std::log1p(std::exp(-std::abs(l)));
          d(static_cast<Eigen::Index>(i), 0) = (1.0f / (1.0f + std::exp(-l)) - t) / static_cast<float>(n);
        }
        std::fill(grad.begin(), grad.end(), 0.0f);
        encoder_.backward(weights_.data(), grad.data(), cache, d);
        adam.step(weights_, grad);
      }
      curve.push_back(total / static_cast<double>(order.size()));
    }
    return curve;
  }

  std::vector<double> predict_proba(std::span<const GestureWindow* const> windows, std::size_t chunk = 64) const {
    if (!fitted()) throw UsageError("ConvGruClassifier: not fitted");
    std::vector<double> out;
    for (std::size_t start = 0; start < windows.size(); start += chunk) {
      const std::size_t n = std::min(chunk, windows.size() - start);
      std::vector<Matrix<double>> x;
      for (std::size_t i = 0; i < n; ++i) x.push_back(normalize_values(windows[start + i]->values, stats_));
      std::vector<const Matrix<double>*> ptrs;
      for (const auto& m : x) ptrs.push_back(&m);
      Encoder<float>::Cache cache;
      const auto logits = encoder_.forward(weights_.data(), stack_windows<float>(ptrs, arch_), n, cache);
      for (std::size_t i = 0; i < n; ++i) {
        out.push_back(1.0 / (1.0 + std::exp(-static_cast<double>(logits(static_cast<Eigen::Index>(i), 0)))));
      }
    }
    return out;
  }

 private:
  ArchSpec arch_;
  nn::ParamLayout layout_;
  Encoder<float> encoder_;
  nn::ParamVec<float> weights_;
  ChannelStats stats_;
};

}  // namespace userboost
