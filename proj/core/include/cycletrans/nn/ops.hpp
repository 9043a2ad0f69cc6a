#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "cycletrans/nn/params.hpp"

namespace cycletrans::nn {

inline Vector sigmoid(const Vector& z) {
  return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

inline Vector tanh(const Vector& z) {
  return z.unaryExpr([](double v) { return std::tanh(v); });
}

/// Numerically stable softmax.
inline Vector softmax(const Vector& z) {
  const double m = z.maxCoeff();
  Vector e = (z.array() - m).exp().matrix();
  return e / e.sum();
}

inline Vector log_softmax(const Vector& z) {
  const double m = z.maxCoeff();
  const double lse = m + std::log((z.array() - m).exp().sum());
  return (z.array() - lse).matrix();
}

inline std::vector<double> softmax(std::span<const double> z) {
  const Vector v = softmax(Eigen::Map<const Vector>(z.data(), static_cast<Eigen::Index>(z.size())));
  return {v.data(), v.data() + v.size()};
}

/// Backward of softmax: given p = softmax(z) and dL/dp, returns dL/dz.
inline Vector softmax_backward(const Vector& p, const Vector& dp) {
  return (p.array() * (dp.array() - p.dot(dp))).matrix();
}

}  // namespace cycletrans::nn
