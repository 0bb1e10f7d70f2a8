#pragma once

#include <string>
#include <string_view>

#include "userboost/dissimilarity/feature_loss.hpp"
#include "userboost/dissimilarity/keogh.hpp"
#include "userboost/dissimilarity/mse.hpp"
#include "userboost/dissimilarity/soft_dtw.hpp"

namespace userboost {

enum class CombinedKind { mse_feature, klbmod_feature };

struct CombinedWeights {
  double mse_feature_mix = 0.1;
  double klbmod_feature_mix = 0.01;
};

// mse + 0.1 * feature_loss, or klb_mod + 0.01 * feature_loss by default.
template <typename T>
LossValue<T> combined_loss(CombinedKind kind, const Matrix<T>& x, const Matrix<T>& y,
                           const CombinedWeights& weights = {}) {
  LossValue<T> base = kind == CombinedKind::mse_feature ? mse(x, y) : klb_mod(x, y);
  const double mix =
      kind == CombinedKind::mse_feature ? weights.mse_feature_mix : weights.klbmod_feature_mix;
  if (mix != 0.0) base += feature_loss(x, y).scaled(static_cast<T>(mix));
  return base;
}

// Every reconstruction loss the autoencoder can be trained with.
enum class ReconstructionLoss { mse, soft_dtw, klb_mod, mse_feature, klbmod_feature };

inline std::string_view to_string(ReconstructionLoss k) {
  switch (k) {
    case ReconstructionLoss::mse: return "mse";
    case ReconstructionLoss::soft_dtw: return "soft_dtw";
    case ReconstructionLoss::klb_mod: return "klb_mod";
    case ReconstructionLoss::mse_feature: return "mse_feature";
    case ReconstructionLoss::klbmod_feature: return "klbmod_feature";
  }
  return "?";
}

inline ReconstructionLoss parse_reconstruction_loss(std::string_view s) {
  for (auto k : {ReconstructionLoss::mse, ReconstructionLoss::soft_dtw, ReconstructionLoss::klb_mod,
                 ReconstructionLoss::mse_feature, ReconstructionLoss::klbmod_feature}) {
    if (to_string(k) == s) return k;
  }
  throw UsageError("unknown reconstruction loss '" + std::string(s) + "'");
}

template <typename T>
LossValue<T> reconstruction_loss(ReconstructionLoss kind, const Matrix<T>& x, const Matrix<T>& y,
                                 double feature_mix, double soft_dtw_gamma) {
  switch (kind) {
    case ReconstructionLoss::mse: return mse(x, y);
    case ReconstructionLoss::soft_dtw: return soft_dtw(x, y, SoftDtwConfig{soft_dtw_gamma});
    case ReconstructionLoss::klb_mod: return klb_mod(x, y);
    case ReconstructionLoss::mse_feature:
      return combined_loss(CombinedKind::mse_feature, x, y, {feature_mix, 0.0});
    case ReconstructionLoss::klbmod_feature:
      return combined_loss(CombinedKind::klbmod_feature, x, y, {0.0, feature_mix});
  }
  throw UsageError("reconstruction_loss: unknown kind");
}

}  // namespace userboost
