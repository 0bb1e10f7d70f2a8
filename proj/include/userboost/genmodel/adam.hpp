#pragma once

#include <cmath>
#include <vector>

#include "userboost/genmodel/nn.hpp"

namespace userboost {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

template <typename T>
class Adam {
 public:
  Adam(std::size_t n, const AdamConfig& cfg) : cfg_(cfg), m_(n, T(0)), v_(n, T(0)) {}

  void step(nn::ParamVec<T>& params, const nn::ParamVec<T>& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    const T lr = static_cast<T>(cfg_.learning_rate * std::sqrt(c2) / c1);
    const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
    const T eps = static_cast<T>(cfg_.epsilon * std::sqrt(c2));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = b1 * m_[i] + (T(1) - b1) * grad[i];
      v_[i] = b2 * v_[i] + (T(1) - b2) * grad[i] * grad[i];
      params[i] -= lr * m_[i] / (std::sqrt(v_[i]) + eps);
    }
  }

  long steps() const { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<T> m_, v_;
  long t_ = 0;
};

}  // namespace userboost
