#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "cycletrans/nn/params.hpp"

namespace cycletrans::testing {

struct GradCheckResult {
  double worst_relative_error = 0.0;
  std::string worst_tensor;
  std::size_t checked = 0;
};

/// Compares `analytic` against central differences of `loss` over every
/// tensor of `params`. The per-tensor error is ||num - ana|| / max(||num|| + ||ana||, floor),
/// so coordinates with tiny gradients do not dominate through cancellation noise.
inline GradCheckResult check_gradients(nn::ParamSet& params, const nn::GradSet& analytic,
                                       const std::function<double()>& loss, double eps = 1e-5,
                                       double floor = 1e-7) {
  GradCheckResult result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = params.at(k);
    const auto& g = analytic.at(k);
    double diff2 = 0.0;
    double num2 = 0.0;
    double ana2 = 0.0;
    for (Eigen::Index j = 0; j < m.size(); ++j) {
      const double old = m.data()[j];
      m.data()[j] = old + eps;
      const double up = loss();
      m.data()[j] = old - eps;
      const double down = loss();
      m.data()[j] = old;
      const double num = (up - down) / (2.0 * eps);
      const double ana = g.data()[j];
      diff2 += (num - ana) * (num - ana);
      num2 += num * num;
      ana2 += ana * ana;
      ++result.checked;
    }
    const double denom = std::max(std::sqrt(num2) + std::sqrt(ana2), floor);
    const double rel = std::sqrt(diff2) / denom;
    if (rel > result.worst_relative_error) {
      result.worst_relative_error = rel;
      result.worst_tensor = params.name(k);
    }
  }
  return result;
}

}  // namespace cycletrans::testing
