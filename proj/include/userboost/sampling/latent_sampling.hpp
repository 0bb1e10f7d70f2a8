#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "userboost/core/random.hpp"
#include "userboost/data/normalize.hpp"
#include "userboost/genmodel/model.hpp"

namespace userboost {

struct UserEmbeddings {
  int user_id = 0;
  std::vector<LatentDistribution> entries;
  std::vector<std::optional<int>> terminals;  // parallel to entries

  std::size_t dim() const { return entries.empty() ? 0 : entries.front().dim(); }
};

enum class SamplingStrategy { neighbourhood, self_mixed, adversarial, same_user };

inline std::string_view to_string(SamplingStrategy s) {
  switch (s) {
    case SamplingStrategy::neighbourhood: return "neighbourhood";
    case SamplingStrategy::self_mixed: return "self_mixed";
    case SamplingStrategy::adversarial: return "adversarial";
    case SamplingStrategy::same_user: return "same_user";
  }
  return "?";
}

inline SamplingStrategy parse_strategy(std::string_view s) {
  if (s == "neighbourhood" || s == "neighborhood") return SamplingStrategy::neighbourhood;
  if (s == "self_mixed" || s == "self-mixed") return SamplingStrategy::self_mixed;
  if (s == "adversarial") return SamplingStrategy::adversarial;
  if (s == "same_user" || s == "same-user") return SamplingStrategy::same_user;
  throw UsageError("unknown sampling strategy '" + std::string(s) + "'");
}

inline bool needs_other_users(SamplingStrategy s) {
  return s == SamplingStrategy::adversarial || s == SamplingStrategy::same_user;
}

namespace detail {

inline void require_embeddings(const UserEmbeddings& e, const char* where) {
  if (e.entries.empty()) throw UsageError(std::string(where) + ": user " + std::to_string(e.user_id) + " has no embeddings");
}

inline void require_others(std::span<const UserEmbeddings> others, const char* where) {
  if (others.empty()) throw UsageError(std::string(where) + ": no other-user embeddings");
  for (const auto& o : others) require_embeddings(o, where);
}

inline const LatentDistribution& pick_other(std::span<const UserEmbeddings> others, Rng& rng) {
  const auto& user = others[uniform_index(rng, others.size())];
  return user.entries[uniform_index(rng, user.entries.size())];
}

}  // namespace detail

inline std::vector<std::vector<double>> sample_neighbourhood(const UserEmbeddings& emb, std::size_t count,
                                                             std::uint64_t seed) {
  detail::require_embeddings(emb, "sample_neighbourhood");
  std::vector<std::vector<double>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = make_rng(child_seed(seed, i));
    const auto& e = emb.entries[uniform_index(rng, emb.entries.size())];
    out.push_back(reparameterize(e, rng));
  }
  return out;
}

inline std::vector<std::vector<double>> sample_self_mixed(const UserEmbeddings& emb, std::size_t count,
                                                          std::size_t k, std::uint64_t seed) {
  detail::require_embeddings(emb, "sample_self_mixed");
  if (emb.entries.size() < 2) throw UsageError("sample_self_mixed: need at least 2 embeddings");
  if (k < 2 || k > emb.entries.size()) {
    throw UsageError("sample_self_mixed: k=" + std::to_string(k) + " must lie in [2, " +
                     std::to_string(emb.entries.size()) + "]");
  }
  const std::size_t d = emb.dim();
  std::vector<std::vector<double>> out;
  out.reserve(count);
  std::vector<std::size_t> idx(emb.entries.size());
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = make_rng(child_seed(seed, i));
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates: the first k positions are a uniform k-subset.
    for (std::size_t j = 0; j < k; ++j) std::swap(idx[j], idx[j + uniform_index(rng, idx.size() - j)]);
    std::vector<double> w(k);
    double total = 0;
    for (auto& v : w) total += (v = standard_exponential(rng));
    std::vector<double> z(d, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      const auto& mu = emb.entries[idx[j]].mean;
      for (std::size_t c = 0; c < d; ++c) z[c] += (w[j] / total) * mu[c];
    }
    out.push_back(std::move(z));
  }
  return out;
}

inline constexpr double kAdversarialTargetWeight = 0.85;

inline std::vector<std::vector<double>> sample_adversarial(const UserEmbeddings& target,
                                                           std::span<const UserEmbeddings> others,
                                                           std::size_t count, std::uint64_t seed) {
  detail::require_embeddings(target, "sample_adversarial");
  detail::require_others(others, "sample_adversarial");
  const std::size_t d = target.dim();
  std::vector<std::vector<double>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = make_rng(child_seed(seed, i));
    const auto& t = target.entries[uniform_index(rng, target.entries.size())].mean;
    const auto& o = detail::pick_other(others, rng).mean;
    std::vector<double> z(d);
    for (std::size_t c = 0; c < d; ++c) z[c] = kAdversarialTargetWeight * t[c] + (1.0 - kAdversarialTargetWeight) * o[c];
    out.push_back(std::move(z));
  }
  return out;
}

inline constexpr std::size_t kSameUserKeptDims = 5;

inline std::vector<std::vector<double>> sample_same_user(const UserEmbeddings& target,
                                                         std::span<const UserEmbeddings> others,
                                                         std::size_t count, std::uint64_t seed) {
  detail::require_embeddings(target, "sample_same_user");
  detail::require_others(others, "sample_same_user");
  std::vector<std::vector<double>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = make_rng(child_seed(seed, i));
    std::vector<double> z = target.entries[uniform_index(rng, target.entries.size())].mean;
    const auto& o = detail::pick_other(others, rng).mean;
    for (std::size_t c = kSameUserKeptDims; c < z.size(); ++c) z[c] = o[c];
    out.push_back(std::move(z));
  }
  return out;
}

struct SamplingOptions {
  std::size_t self_mixed_k = 3;
};

inline std::vector<std::vector<double>> sample_latents(SamplingStrategy s, const UserEmbeddings& target,
                                                       std::span<const UserEmbeddings> others, std::size_t count,
                                                       std::uint64_t seed, const SamplingOptions& opt = {}) {
  switch (s) {
    case SamplingStrategy::neighbourhood: return sample_neighbourhood(target, count, seed);
    case SamplingStrategy::self_mixed:
      return sample_self_mixed(target, count, std::min(opt.self_mixed_k, target.entries.size()), seed);
    case SamplingStrategy::adversarial: return sample_adversarial(target, others, count, seed);
    case SamplingStrategy::same_user: return sample_same_user(target, others, count, seed);
  }
  throw UsageError("unknown sampling strategy");
}

// Encodes raw (un-normalised) windows of one user with the model's statistics.
inline UserEmbeddings embed_user(int user_id, std::span<const GestureWindow* const> windows, const ModelParams& model) {
  UserEmbeddings out;
  out.user_id = user_id;
  std::vector<Matrix<double>> norm;
  norm.reserve(windows.size());
  for (const auto* w : windows) {
    norm.push_back(normalize_values(w->values, model.stats));
    out.terminals.push_back(w->terminal_id);
  }
  std::vector<const Matrix<double>*> ptrs;
  for (const auto& m : norm) ptrs.push_back(&m);
  out.entries = encode_all(ptrs, model);
  return out;
}

// Decodes latent points into de-normalised synthetic gesture windows.
inline std::vector<GestureWindow> decode_synthetic(std::span<const std::vector<double>> zs, const ModelParams& model,
                                                   int user_id) {
  if (!model.trained) throw DataError("generate: model checkpoint is untrained");
  std::vector<GestureWindow> out;
  auto decoded = decode_all(zs, model);
  out.reserve(decoded.size());
  for (std::size_t i = 0; i < decoded.size(); ++i) {
    GestureWindow w;
    w.values = denormalize_values(decoded[i], model.stats);
    w.user_id = user_id;
    w.label = Label::gesture;
    w.order_index = static_cast<int>(i);
    w.synthetic = true;
    out.push_back(std::move(w));
  }
  return out;
}

inline std::vector<GestureWindow> generate(SamplingStrategy s, const ModelParams& model, const UserEmbeddings& target,
                                           std::span<const UserEmbeddings> others, std::size_t count,
                                           std::uint64_t seed, const SamplingOptions& opt = {}) {
  if (!model.trained) throw DataError("generate: model checkpoint is untrained");
  const auto zs = sample_latents(s, target, others, count, seed, opt);
  return decode_synthetic(zs, model, target.user_id);
}

}  // namespace userboost
