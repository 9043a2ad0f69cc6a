#pragma once

#include <vector>

#include "cycletrans/nn/params.hpp"

namespace cycletrans::nn {

/// Adagrad: per-coordinate accumulator of squared gradients,
/// step = lr * g / sqrt(acc). The accumulator starts at `initial_accumulator`.
class Adagrad {
 public:
  static constexpr double kDefaultInitialAccumulator = 0.1;

  Adagrad() = default;
  explicit Adagrad(const ParamSet& params, double initial_accumulator = kDefaultInitialAccumulator);

  /// Descent step: params -= lr * g / sqrt(acc).
  void step(ParamSet& params, const GradSet& grads, double learning_rate);

  const std::vector<Matrix>& accumulators() const noexcept { return accumulators_; }
  std::vector<Matrix>& accumulators() noexcept { return accumulators_; }
  bool initialized() const noexcept { return !accumulators_.empty(); }

 private:
  std::vector<Matrix> accumulators_;
};

/// Rescales `grads` so its global L2 norm is at most `max_norm`. Returns the
/// norm before clipping.
double clip_global_norm(GradSet& grads, double max_norm);

}  // namespace cycletrans::nn
