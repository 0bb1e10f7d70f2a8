#pragma once

#include "userboost/core/matrix.hpp"

namespace userboost {

// A scalar loss and its gradient with respect to the second (reconstructed)
// argument; the gradient has that argument's shape.
template <typename T>
struct LossValue {
  T value{};
  Matrix<T> gradient;

  LossValue& operator+=(const LossValue& other) {
    value += other.value;
    if (gradient.empty()) {
      gradient = other.gradient;
    } else {
      require_same_shape(gradient, other.gradient, "LossValue::operator+=");
      for (std::size_t i = 0; i < gradient.size(); ++i) gradient.data()[i] += other.gradient.data()[i];
    }
    return *this;
  }

  LossValue scaled(T factor) const {
    LossValue out = *this;
    out.value *= factor;
    for (auto& g : out.gradient.data()) g *= factor;
    return out;
  }
};

}  // namespace userboost
