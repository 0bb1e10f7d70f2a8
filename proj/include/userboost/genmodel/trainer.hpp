#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "userboost/core/random.hpp"
#include "userboost/data/normalize.hpp"
#include "userboost/genmodel/adam.hpp"
#include "userboost/genmodel/model.hpp"

namespace userboost {

struct TrainConfig {
  double learning_rate = 1e-4;
  int patience = 150;
  int max_epochs = 2000;
  int batch_size = 64;
  double validation_fraction = 0.2;
  std::uint64_t seed = 1;

  void validate() const {
    if (patience < 1) throw UsageError("TrainConfig: patience must be >= 1");
    if (max_epochs < 1) throw UsageError("TrainConfig: max_epochs must be >= 1");
    if (batch_size < 1) throw UsageError("TrainConfig: batch_size must be >= 1");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
      throw UsageError("TrainConfig: validation_fraction must lie in (0, 1)");
    }
    if (!(learning_rate >= 0.0)) throw UsageError("TrainConfig: learning_rate must be >= 0");
  }
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;
  double val_loss = 0;
  double val_reconstruction = 0;
  double val_regularizer = 0;
  double val_auth = 0;
  double val_approx_mrr = 0;  // 1 - smoothed reciprocal-rank loss
  double val_hard_mrr = 0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> curve;
  int best_epoch = 0;
  int stopped_epoch = 0;
  std::vector<std::size_t> validation_indices;  // into the gesture list
};

// One sample of the training set: a normalised window and its roster index.
struct TrainSample {
  const Matrix<double>* values;
  std::size_t user_index;
};

// Forward and backward pass over one batch. `eps` holds the reparameterisation
// noise (batch x latent_dim, empty for z = mean) and `draws` the WAE Gaussian
// sample. Accumulates into `grad` (same length as params) when non-null.
template <typename T>
BatchLoss<T> forward_backward(const VaeNetwork<T>& net, const nn::ParamVec<T>& params,
                              std::span<const TrainSample> batch, const LossWeights& weights,
                              const nn::Mat<T>& eps, const nn::Mat<T>& draws, nn::ParamVec<T>* grad) {
  const ArchSpec& arch = net.arch();
  const std::size_t n = batch.size();
  const auto d = static_cast<Eigen::Index>(arch.latent_dim);
  std::vector<const Matrix<double>*> windows;
  std::vector<std::size_t> labels;
  for (const auto& s : batch) {
    windows.push_back(s.values);
    labels.push_back(s.user_index);
  }
  const nn::Mat<T> x = stack_windows<T>(windows, arch);
  const T* p = params.data();

  typename Encoder<T>::Cache enc_cache;
  const nn::Mat<T> head = net.encoder().forward(p, x, n, enc_cache);
  const nn::Mat<T> mean = head.leftCols(d);
  const nn::Mat<T> log_var = head.rightCols(d);
  nn::Mat<T> sigma_eps;
  nn::Mat<T> z = mean;
  if (eps.size() > 0) {
    sigma_eps = (T(0.5) * log_var.array()).exp().matrix().cwiseProduct(eps);
    z += sigma_eps;
  }
  typename Decoder<T>::Cache dec_cache;
  const nn::Mat<T> recon = net.decoder().forward(p, z, dec_cache);
  typename AuthHead<T>::Cache auth_cache;
  nn::Mat<T> scores;
  if (net.has_auth()) scores = net.auth().forward(p, mean, auth_cache);

  BatchLoss<T> loss = batch_loss<T>(x, recon, mean, log_var, scores, labels, weights, draws);
  loss.scores = scores;
  if (!grad) return loss;

  T* g = grad->data();
  const nn::Mat<T> dz = net.decoder().backward(p, g, dec_cache, loss.d_recon);
  nn::Mat<T> d_mean = loss.d_mean + dz;
  nn::Mat<T> d_log_var = loss.d_log_var;
  if (eps.size() > 0) d_log_var += (T(0.5) * dz.cwiseProduct(sigma_eps));
  if (net.has_auth() && weights.alpha > 0.0) {
    d_mean += net.auth().backward(p, g, auth_cache, loss.d_scores, arch.latent_dim);
  }
  nn::Mat<T> d_head(static_cast<Eigen::Index>(n), 2 * d);
  d_head.leftCols(d) = d_mean;
  d_head.rightCols(d) = d_log_var;
  net.encoder().backward(p, g, enc_cache, d_head);
  return loss;
}

// Trains the regularised autoencoder on an explicit train/validation
// partition of gesture windows. Channel statistics come from both parts. The
// parameters with the lowest validation objective are kept and training stops
// after `patience` epochs without strict improvement.
inline TrainResult train_partitioned(std::span<const GestureWindow* const> train_windows,
                                     std::span<const GestureWindow* const> val_windows, const TrainConfig& cfg,
                                     const LossWeights& weights, ArchSpec arch = {},
                                     const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  cfg.validate();
  weights.validate();
  std::vector<const GestureWindow*> gestures(train_windows.begin(), train_windows.end());
  gestures.insert(gestures.end(), val_windows.begin(), val_windows.end());
  for (const auto* w : gestures) {
    if (w->label != Label::gesture) throw UsageError("train: non-gesture window in the training data");
  }
  if (train_windows.empty() || val_windows.empty()) throw DataError("train: empty training or validation partition");
  std::vector<int> roster;
  for (const auto* w : gestures) roster.push_back(w->user_id);
  std::sort(roster.begin(), roster.end());
  roster.erase(std::unique(roster.begin(), roster.end()), roster.end());
  if (roster.size() < 2) throw DataError("train: need gestures from at least 2 users");

  const ChannelStats stats = compute_channel_stats(gestures);
  check_stats(stats);
  std::vector<Matrix<double>> normalized;
  normalized.reserve(gestures.size());
  for (const auto* w : gestures) normalized.push_back(normalize_values(w->values, stats));
  std::map<int, std::size_t> user_index;
  for (std::size_t i = 0; i < roster.size(); ++i) user_index[roster[i]] = i;

  arch.n_users = roster.size();
  arch.window_length = kWindowLength;
  arch.channels = kChannels;
  arch.validate();

  TrainResult result;
  result.params = initialise_model(arch, cfg.seed);
  result.params.roster = roster;
  result.params.stats = stats;
  result.params.loss_weights = weights;

  std::vector<std::size_t> train_idx(train_windows.size());
  std::iota(train_idx.begin(), train_idx.end(), std::size_t{0});
  auto sample = [&](std::size_t i) {
    return TrainSample{&normalized[i], user_index.at(gestures[i]->user_id)};
  };
  std::vector<TrainSample> val_samples;
  for (std::size_t i = train_windows.size(); i < gestures.size(); ++i) val_samples.push_back(sample(i));

  const VaeNetwork<float> net(arch);
  nn::ParamVec<float>& params = result.params.weights;
  Adam<float> adam(params.size(), {cfg.learning_rate});
  nn::ParamVec<float> grad(params.size());
  Rng rng = make_rng(child_seed(cfg.seed, 2));

  auto evaluate = [&](EpochRecord& rec) {
    double total = 0, recon = 0, reg = 0, auth = 0, hard = 0;
    const std::size_t chunk = static_cast<std::size_t>(cfg.batch_size);
    for (std::size_t start = 0; start < val_samples.size(); start += chunk) {
      const std::size_t n = std::min(chunk, val_samples.size() - start);
      std::span<const TrainSample> part(val_samples.data() + start, n);
      nn::Mat<float> draws;
      if (weights.regularizer == Regularizer::wae) {
        draws.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(arch.latent_dim));
        Rng draw_rng = make_rng(child_seed(cfg.seed, 3 + start));
        for (Eigen::Index i = 0; i < draws.size(); ++i) draws.data()[i] = static_cast<float>(standard_normal(draw_rng));
      }
      const auto loss = forward_backward<float>(net, params, part, weights, {}, draws, nullptr);
      const double share = static_cast<double>(n) / static_cast<double>(val_samples.size());
      total += share * loss.total;
      recon += share * loss.reconstruction;
      reg += share * loss.regularizer;
      auth += share * loss.auth;
      std::vector<std::size_t> labels;
      for (const auto& s : part) labels.push_back(s.user_index);
      Matrix<float> sm(n, arch.n_users);
      std::copy(loss.scores.data(), loss.scores.data() + loss.scores.size(), sm.data().begin());
      hard += share * hard_mrr(sm, labels);
    }
    rec.val_loss = total;
    rec.val_reconstruction = recon;
    rec.val_regularizer = reg;
    rec.val_auth = auth;
    rec.val_approx_mrr = 1.0 - auth;
    rec.val_hard_mrr = hard;
  };

  double best = std::numeric_limits<double>::infinity();
  nn::ParamVec<float> best_params = params;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::vector<std::size_t> perm = train_idx;
    std::shuffle(perm.begin(), perm.end(), rng);
    double train_total = 0;
    const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < perm.size(); start += bs, ++batch_no) {
      const std::size_t n = std::min(bs, perm.size() - start);
      std::vector<TrainSample> batch;
      for (std::size_t i = 0; i < n; ++i) batch.push_back(sample(perm[start + i]));
      nn::Mat<float> eps(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(arch.latent_dim));
      for (Eigen::Index i = 0; i < eps.size(); ++i) eps.data()[i] = static_cast<float>(standard_normal(rng));
      nn::Mat<float> draws;
      if (weights.regularizer == Regularizer::wae) {
        draws.resize(eps.rows(), eps.cols());
        for (Eigen::Index i = 0; i < draws.size(); ++i) draws.data()[i] = static_cast<float>(standard_normal(rng));
      }
      std::fill(grad.begin(), grad.end(), 0.0f);
      const auto loss = forward_backward<float>(net, params, batch, weights, eps, draws, &grad);
      bool ok = std::isfinite(loss.total);
      for (float gv : grad) ok = ok && std::isfinite(gv);
      if (!ok) {
        throw DataError("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                        std::to_string(batch_no));
      }
      train_total += loss.total * static_cast<double>(n) / static_cast<double>(perm.size());
      adam.step(params, grad);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_total;
    evaluate(rec);
    if (!std::isfinite(rec.val_loss)) {
      throw DataError("train: non-finite validation loss at epoch " + std::to_string(epoch));
    }
    result.curve.push_back(rec);
    if (on_epoch) on_epoch(rec);
    result.stopped_epoch = epoch;
    if (rec.val_loss < best) {
      best = rec.val_loss;
      result.best_epoch = epoch;
      best_params = params;
    } else if (epoch - result.best_epoch >= cfg.patience) {
      break;
    }
  }
  params = std::move(best_params);
  result.params.trained = true;
  return result;
}

// Seeded random validation split of the gesture windows of `dataset`.
inline std::pair<std::vector<const GestureWindow*>, std::vector<const GestureWindow*>> random_validation_split(
    const Dataset& dataset, double validation_fraction, std::uint64_t seed, std::vector<std::size_t>* val_indices = nullptr) {
  std::vector<const GestureWindow*> gestures;
  for (const auto& w : dataset.windows) {
    if (w.label == Label::gesture) gestures.push_back(&w);
  }
  if (gestures.size() < 2) throw DataError("train: need at least 2 gestures");
  std::vector<std::size_t> order(gestures.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(child_seed(seed, 1));
  std::shuffle(order.begin(), order.end(), rng);
  auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(gestures.size())));
  n_val = std::clamp<std::size_t>(n_val, 1, gestures.size() - 1);
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<long>(n_val));
  std::vector<std::size_t> tr(order.begin() + static_cast<long>(n_val), order.end());
  std::sort(val.begin(), val.end());
  std::sort(tr.begin(), tr.end());
  std::pair<std::vector<const GestureWindow*>, std::vector<const GestureWindow*>> out;
  for (auto i : tr) out.first.push_back(gestures[i]);
  for (auto i : val) out.second.push_back(gestures[i]);
  if (val_indices) *val_indices = val;
  return out;
}

// Trains on the gesture windows of `dataset` with a seeded random
// validation_fraction held out.
inline TrainResult train(const Dataset& dataset, const TrainConfig& cfg, const LossWeights& weights,
                         ArchSpec arch = {}, const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  cfg.validate();
  std::vector<std::size_t> val_idx;
  const auto [tr, val] = random_validation_split(dataset, cfg.validation_fraction, cfg.seed, &val_idx);
  TrainResult r = train_partitioned(tr, val, cfg, weights, arch, on_epoch);
  r.validation_indices = std::move(val_idx);
  return r;
}

}  // namespace userboost
