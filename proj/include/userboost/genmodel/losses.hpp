#pragma once

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "userboost/dissimilarity/combined.hpp"
#include "userboost/genmodel/nn.hpp"

namespace userboost {

// Encoder output for one window: latent mean and log-variance.
struct LatentDistribution {
  std::vector<double> mean;
  std::vector<double> log_variance;

  std::size_t dim() const { return mean.size(); }
  friend bool operator==(const LatentDistribution&, const LatentDistribution&) = default;
};

enum class Regularizer { kl, wae };

inline std::string_view to_string(Regularizer r) { return r == Regularizer::kl ? "kl" : "wae"; }
inline Regularizer parse_regularizer(std::string_view s) {
  if (s == "kl" || s == "vae") return Regularizer::kl;
  if (s == "wae") return Regularizer::wae;
  throw UsageError("unknown regularizer '" + std::string(s) + "'");
}

struct LossWeights {
  double beta = 1e-4;          // regularizer weight
  double alpha = 1e-2;         // latent authentication weight
  double gamma = 0.1;          // Soft-DTW smoothing
  double feature_mix = 0.01;   // feature-loss share of the reconstruction loss
  double tau = 1.0;            // approximate-rank temperature
  Regularizer regularizer = Regularizer::kl;
  ReconstructionLoss reconstruction = ReconstructionLoss::klbmod_feature;

  void validate() const {
    if (!(beta >= 0.0) || !(alpha >= 0.0)) throw UsageError("LossWeights: beta and alpha must be >= 0");
    if (!(gamma > 0.0)) throw UsageError("LossWeights: gamma must be > 0");
    if (!(tau > 0.0)) throw UsageError("LossWeights: tau must be > 0");
    if (!(feature_mix >= 0.0)) throw UsageError("LossWeights: feature_mix must be >= 0");
  }
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

// Mean over latent dimensions of -1/2 (1 + log s^2 - mu^2 - s^2). The
// gradient has two rows: d/d mu and d/d log s^2.
template <typename T>
LossValue<T> kl_loss(std::span<const T> mean, std::span<const T> log_var) {
  if (mean.size() != log_var.size() || mean.empty()) throw UsageError("kl_loss: dimension mismatch");
  const T d = static_cast<T>(mean.size());
  LossValue<T> out{T(0), Matrix<T>(2, mean.size())};
  for (std::size_t k = 0; k < mean.size(); ++k) {
    const T var = std::exp(log_var[k]);
    out.value += T(-0.5) * (T(1) + log_var[k] - mean[k] * mean[k] - var);
    out.gradient(0, k) = mean[k] / d;
    out.gradient(1, k) = T(-0.5) * (T(1) - var) / d;
  }
  out.value /= d;
  return out;
}

inline LossValue<double> kl_loss(const LatentDistribution& dist) {
  return kl_loss<double>(dist.mean, dist.log_variance);
}

// Kernel-free WAE penalty with squared distances:
//   1/(n(n-1)) sum_{i!=j} |m_i - m_j|^2 + 1/(n(n-1)) sum_{i!=j} |z_i - z_j|^2
//   - 2/n^2 sum_{i,j} |m_i - z_j|^2
// Gradient is taken with respect to the means (rows of `means`).
template <typename T>
LossValue<T> wae_loss(const Matrix<T>& means, const Matrix<T>& draws) {
  require_same_shape(means, draws, "wae_loss");
  const std::size_t n = means.rows(), dim = means.cols();
  if (n < 2) throw UsageError("wae_loss: need at least 2 points");
  const T pair_norm = T(1) / static_cast<T>(n * (n - 1));
  const T cross_norm = T(2) / static_cast<T>(n * n);
  LossValue<T> out{T(0), Matrix<T>(n, dim)};
  auto sqdist = [dim](std::span<const T> a, std::span<const T> b) {
    T s = 0;
    for (std::size_t k = 0; k < dim; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return s;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) {
        out.value += pair_norm * (sqdist(means.row(i), means.row(j)) + sqdist(draws.row(i), draws.row(j)));
        for (std::size_t k = 0; k < dim; ++k) {
          out.gradient(i, k) += pair_norm * T(4) * (means(i, k) - means(j, k));
        }
      }
      out.value -= cross_norm * sqdist(means.row(i), draws.row(j));
      for (std::size_t k = 0; k < dim; ++k) {
        out.gradient(i, k) -= cross_norm * T(2) * (means(i, k) - draws(j, k));
      }
    }
  }
  return out;
}

// Smoothed reciprocal-rank loss: rank_i = 1 + sum_{j != y_i} sig((s_j - s_{y_i}) / tau),
// loss = 1 - mean_i 1 / rank_i. Gradient with respect to the scores.
template <typename T>
LossValue<T> approx_mrr_loss(const Matrix<T>& scores, std::span<const std::size_t> true_users,
                             T tau = T(1)) {
  const std::size_t b = scores.rows(), k = scores.cols();
  if (b == 0) throw UsageError("approx_mrr_loss: empty batch");
  if (true_users.size() != b) throw UsageError("approx_mrr_loss: label count mismatch");
  LossValue<T> out{T(1), Matrix<T>(b, k)};
  const T inv_b = T(1) / static_cast<T>(b);
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t t = true_users[i];
    if (t >= k) throw UsageError("approx_mrr_loss: label out of range");
    T rank = 1;
    for (std::size_t j = 0; j < k; ++j) {
      if (j != t) rank += nn::sigmoid((scores(i, j) - scores(i, t)) / tau);
    }
    out.value -= inv_b / rank;
    // d loss / d rank = 1 / (b rank^2)
    const T up = inv_b / (rank * rank);
    for (std::size_t j = 0; j < k; ++j) {
      if (j == t) continue;
      const T s = nn::sigmoid((scores(i, j) - scores(i, t)) / tau);
      const T ds = up * s * (T(1) - s) / tau;
      out.gradient(i, j) += ds;
      out.gradient(i, t) -= ds;
    }
  }
  return out;
}

// Hard mean reciprocal rank; tied competitors count half (mid-rank).
template <typename T>
double hard_mrr(const Matrix<T>& scores, std::span<const std::size_t> true_users) {
  if (scores.rows() == 0) return 0.0;
  double sum = 0;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const std::size_t t = true_users[i];
    double rank = 1;
    for (std::size_t j = 0; j < scores.cols(); ++j) {
      if (j == t) continue;
      if (scores(i, j) > scores(i, t)) rank += 1;
      else if (scores(i, j) == scores(i, t)) rank += 0.5;
    }
    sum += 1.0 / rank;
  }
  return sum / static_cast<double>(scores.rows());
}

// Batch objective: mean reconstruction + beta * regularizer + alpha * auth.
template <typename T>
struct BatchLoss {
  T total = 0, reconstruction = 0, regularizer = 0, auth = 0;
  nn::Mat<T> d_recon, d_mean, d_log_var, d_scores;
  nn::Mat<T> scores;
};

// `recon` and `inputs` are (batch * len) x channels; `scores` is empty when
// the auth head is disabled; `draws` is used only for the WAE regularizer.
template <typename T>
BatchLoss<T> batch_loss(const nn::Mat<T>& inputs, const nn::Mat<T>& recon, const nn::Mat<T>& mean,
                        const nn::Mat<T>& log_var, const nn::Mat<T>& scores,
                        std::span<const std::size_t> true_users, const LossWeights& w,
                        const nn::Mat<T>& draws = {}) {
  w.validate();
  const std::size_t batch = static_cast<std::size_t>(mean.rows());
  const std::size_t dim = static_cast<std::size_t>(mean.cols());
  const std::size_t len = static_cast<std::size_t>(recon.rows()) / batch;
  const std::size_t ch = static_cast<std::size_t>(recon.cols());
  const T inv_b = T(1) / static_cast<T>(batch);
  BatchLoss<T> out;
  out.d_recon.resize(recon.rows(), recon.cols());
  out.d_mean = nn::Mat<T>::Zero(mean.rows(), mean.cols());
  out.d_log_var = nn::Mat<T>::Zero(mean.rows(), mean.cols());

  for (std::size_t b = 0; b < batch; ++b) {
    const auto rows = static_cast<Eigen::Index>(b * len);
    Matrix<T> x(len, ch), y(len, ch);
    std::copy(inputs.data() + rows * static_cast<Eigen::Index>(ch),
              inputs.data() + (rows + static_cast<Eigen::Index>(len)) * static_cast<Eigen::Index>(ch), x.data().begin());
    std::copy(recon.data() + rows * static_cast<Eigen::Index>(ch),
              recon.data() + (rows + static_cast<Eigen::Index>(len)) * static_cast<Eigen::Index>(ch), y.data().begin());
    const auto lv = reconstruction_loss(w.reconstruction, x, y, w.feature_mix, w.gamma);
    out.reconstruction += lv.value * inv_b;
    for (std::size_t i = 0; i < len * ch; ++i) {
      out.d_recon.data()[rows * static_cast<Eigen::Index>(ch) + static_cast<Eigen::Index>(i)] = lv.gradient.data()[i] * inv_b;
    }
  }

  if (w.regularizer == Regularizer::kl) {
    for (std::size_t b = 0; b < batch; ++b) {
      const auto bi = static_cast<Eigen::Index>(b);
      const auto kl = kl_loss<T>(std::span<const T>(mean.row(bi).data(), dim),
                                 std::span<const T>(log_var.row(bi).data(), dim));
      out.regularizer += kl.value * inv_b;
      for (std::size_t k = 0; k < dim; ++k) {
        out.d_mean(bi, static_cast<Eigen::Index>(k)) += static_cast<T>(w.beta) * inv_b * kl.gradient(0, k);
        out.d_log_var(bi, static_cast<Eigen::Index>(k)) += static_cast<T>(w.beta) * inv_b * kl.gradient(1, k);
      }
    }
  } else if (batch >= 2) {
    Matrix<T> m(batch, dim), z(batch, dim);
    std::copy(mean.data(), mean.data() + mean.size(), m.data().begin());
    std::copy(draws.data(), draws.data() + draws.size(), z.data().begin());
    const auto wae = wae_loss(m, z);
    out.regularizer = wae.value;
    for (std::size_t i = 0; i < batch * dim; ++i) out.d_mean.data()[i] += static_cast<T>(w.beta) * wae.gradient.data()[i];
  }

  if (scores.size() > 0) {
    Matrix<T> s(batch, static_cast<std::size_t>(scores.cols()));
    std::copy(scores.data(), scores.data() + scores.size(), s.data().begin());
    const auto mrr = approx_mrr_loss<T>(s, true_users, static_cast<T>(w.tau));
    out.auth = mrr.value;
    out.d_scores.resize(scores.rows(), scores.cols());
    for (Eigen::Index i = 0; i < scores.size(); ++i) out.d_scores.data()[i] = static_cast<T>(w.alpha) * mrr.gradient.data()[static_cast<std::size_t>(i)];
  }

  out.total = out.reconstruction + static_cast<T>(w.beta) * out.regularizer + static_cast<T>(w.alpha) * out.auth;
  return out;
}

}  // namespace userboost

namespace userboost {

// Single-window objective (KL regularizer): the batch objective with one
// sample. `scores` may be empty when no auth head is used.
inline BatchLoss<double> total_loss(const Matrix<double>& x, const Matrix<double>& reconstruction,
                                    const LatentDistribution& dist, std::span<const double> scores,
                                    std::size_t true_user, const LossWeights& weights) {
  require_same_shape(x, reconstruction, "total_loss");
  if (weights.regularizer != Regularizer::kl) {
    throw UsageError("total_loss: the WAE regularizer needs a batch of at least 2 windows");
  }
  using M = nn::Mat<double>;
  const auto rows = static_cast<Eigen::Index>(x.rows()), cols = static_cast<Eigen::Index>(x.cols());
  const M xin = nn::CMap<double>(x.data().data(), rows, cols);
  const M rec = nn::CMap<double>(reconstruction.data().data(), rows, cols);
  const auto d = static_cast<Eigen::Index>(dist.dim());
  const M mean = nn::CMap<double>(dist.mean.data(), 1, d);
  const M lv = nn::CMap<double>(dist.log_variance.data(), 1, d);
  M s;
  if (!scores.empty()) s = nn::CMap<double>(scores.data(), 1, static_cast<Eigen::Index>(scores.size()));
  const std::size_t label[1] = {true_user};
  return batch_loss<double>(xin, rec, mean, lv, s, label, weights);
}

}  // namespace userboost
