#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "userboost/core/random.hpp"
#include "userboost/data/gesture.hpp"
#include "userboost/data/normalize.hpp"
#include "userboost/genmodel/losses.hpp"
#include "userboost/genmodel/network.hpp"

namespace userboost {

// Trained (or freshly initialised) autoencoder: architecture, flat f32
// weights, the user roster of the auth head, the normalisation statistics of
// the training partition and the loss weights it was trained with.
struct ModelParams {
  ArchSpec arch;
  nn::ParamVec<float> weights;
  std::vector<int> roster;
  ChannelStats stats;
  LossWeights loss_weights;
  std::uint64_t seed = 0;
  bool trained = false;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

inline ModelParams initialise_model(const ArchSpec& arch, std::uint64_t seed) {
  const VaeNetwork<float> net(arch);
  ModelParams p;
  p.arch = arch;
  p.seed = seed;
  p.weights = net.layout().initialise<float>(child_seed(seed, 0x1417));
  p.stats.stddev.fill(1.0);
  return p;
}

// Stacks windows of shape window_length x channels into a batch matrix.
template <typename T>
nn::Mat<T> stack_windows(std::span<const Matrix<double>* const> windows, const ArchSpec& arch) {
  nn::Mat<T> out(static_cast<Eigen::Index>(windows.size() * arch.window_length),
                 static_cast<Eigen::Index>(arch.channels));
  for (std::size_t b = 0; b < windows.size(); ++b) {
    const Matrix<double>& w = *windows[b];
    if (w.rows() != arch.window_length || w.cols() != arch.channels) {
      throw UsageError("encode: window shape " + std::to_string(w.rows()) + "x" +
                       std::to_string(w.cols()) + " does not match the architecture");
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      out.data()[b * w.size() + i] = static_cast<T>(w.data()[i]);
    }
  }
  return out;
}

// Batch encoder output split into mean and log-variance.
struct EncodedBatch {
  nn::Mat<float> mean, log_var;
};

inline EncodedBatch encode_batch(const ModelParams& params, std::span<const Matrix<double>* const> windows) {
  const VaeNetwork<float> net(params.arch);
  if (params.weights.size() != net.parameter_count()) throw UsageError("encode: weight count mismatch");
  const auto x = stack_windows<float>(windows, params.arch);
  Encoder<float>::Cache cache;
  const auto head = net.encoder().forward(params.weights.data(), x, windows.size(), cache);
  const auto d = static_cast<Eigen::Index>(params.arch.latent_dim);
  return {head.leftCols(d), head.rightCols(d)};
}

inline LatentDistribution to_distribution(const EncodedBatch& e, std::size_t row) {
  LatentDistribution out;
  const auto r = static_cast<Eigen::Index>(row);
  for (Eigen::Index k = 0; k < e.mean.cols(); ++k) {
    out.mean.push_back(e.mean(r, k));
    out.log_variance.push_back(e.log_var(r, k));
  }
  return out;
}

// Encodes one normalised window.
inline LatentDistribution encode(const Matrix<double>& window, const ModelParams& params) {
  const Matrix<double>* ptr[1] = {&window};
  return to_distribution(encode_batch(params, ptr), 0);
}

inline std::vector<LatentDistribution> encode_all(std::span<const Matrix<double>* const> windows,
                                                  const ModelParams& params, std::size_t chunk = 64) {
  std::vector<LatentDistribution> out;
  out.reserve(windows.size());
  for (std::size_t start = 0; start < windows.size(); start += chunk) {
    const auto part = windows.subspan(start, std::min(chunk, windows.size() - start));
    const auto enc = encode_batch(params, part);
    for (std::size_t i = 0; i < part.size(); ++i) out.push_back(to_distribution(enc, i));
  }
  return out;
}

// z = mu + exp(log_var / 2) * eps with eps ~ N(0, I) from `rng`.
inline std::vector<double> reparameterize(const LatentDistribution& dist, Rng& rng) {
  std::vector<double> z(dist.dim());
  for (std::size_t k = 0; k < z.size(); ++k) {
    z[k] = dist.mean[k] + std::exp(0.5 * dist.log_variance[k]) * standard_normal(rng);
  }
  return z;
}

// Decodes a batch of latent vectors into normalised windows.
inline std::vector<Matrix<double>> decode_all(std::span<const std::vector<double>> zs,
                                              const ModelParams& params, std::size_t chunk = 64) {
  const VaeNetwork<float> net(params.arch);
  if (params.weights.size() != net.parameter_count()) throw UsageError("decode: weight count mismatch");
  const std::size_t d = params.arch.latent_dim, len = params.arch.window_length, ch = params.arch.channels;
  std::vector<Matrix<double>> out;
  out.reserve(zs.size());
  for (std::size_t start = 0; start < zs.size(); start += chunk) {
    const std::size_t n = std::min(chunk, zs.size() - start);
    nn::Mat<float> z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (std::size_t b = 0; b < n; ++b) {
      const auto& zb = zs[start + b];
      if (zb.size() != d) {
        throw UsageError("decode: latent vector has length " + std::to_string(zb.size()) +
                         ", expected " + std::to_string(d));
      }
      for (std::size_t k = 0; k < d; ++k) {
        if (!std::isfinite(zb[k])) throw UsageError("decode: non-finite latent coordinate");
        z(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k)) = static_cast<float>(zb[k]);
      }
    }
    Decoder<float>::Cache cache;
    const auto y = net.decoder().forward(params.weights.data(), z, cache);
    for (std::size_t b = 0; b < n; ++b) {
      Matrix<double> m(len, ch);
      for (std::size_t i = 0; i < len * ch; ++i) m.data()[i] = y.data()[b * len * ch + i];
      out.push_back(std::move(m));
    }
  }
  return out;
}

inline Matrix<double> decode(std::span<const double> z, const ModelParams& params) {
  std::vector<std::vector<double>> zs{std::vector<double>(z.begin(), z.end())};
  return std::move(decode_all(zs, params).front());
}

// Scores over the training roster from the first auth_dims latent coordinates.
inline std::vector<double> auth_head(std::span<const double> latent, const ModelParams& params) {
  if (params.arch.n_users == 0) throw UsageError("auth_head: model has no auth head");
  if (latent.size() != params.arch.latent_dim && latent.size() != params.arch.auth_dims) {
    throw UsageError("auth_head: latent length mismatch");
  }
  const VaeNetwork<float> net(params.arch);
  nn::Mat<float> z = nn::Mat<float>::Zero(1, static_cast<Eigen::Index>(params.arch.latent_dim));
  for (std::size_t k = 0; k < latent.size(); ++k) z(0, static_cast<Eigen::Index>(k)) = static_cast<float>(latent[k]);
  AuthHead<float>::Cache cache;
  const auto s = net.auth().forward(params.weights.data(), z, cache);
  return std::vector<double>(s.data(), s.data() + s.size());
}

}  // namespace userboost
