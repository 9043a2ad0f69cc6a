#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "cycletrans/cycle_trainer.hpp"
#include "cycletrans/neutralizer.hpp"

namespace cycletrans::testing {

/// Exact expectation of the policy-gradient estimator on a 4-token sentence
/// versus its Monte-Carlo mean, projected onto fixed directions.
struct PolicyOracleResult {
  double score_identity_norm = 0.0;  // || sum_m P(m) grad log P(m) ||
  int directions = 0;
  double worst_z = 0.0;              // largest |mc - exact| / standard error
};

inline PolicyOracleResult policy_gradient_oracle(std::uint64_t seed, int samples, double baseline) {
  ModelDims d{12, 4, 5, seed};
  d.init_scale = 0.8;
  Neutralizer model(d);
  const std::vector<TokenId> x{4, 7, 9, 5};
  const auto probs = model.tag_probabilities(x);

  std::array<double, 16> reward{};
  std::array<double, 16> prob{};
  std::vector<nn::GradSet> score(16, nn::GradSet(model.params()));
  Rng table_rng(seed ^ 0x7461626cULL);
  nn::GradSet exact(model.params());
  nn::GradSet identity(model.params());
  for (unsigned bits = 0; bits < 16; ++bits) {
    Mask m(4);
    for (unsigned i = 0; i < 4; ++i) m[i] = (bits >> i) & 1U;
    reward[bits] = table_rng.uniform(0.0, 2.0);
    prob[bits] = std::exp(mask_log_prob(probs, m));
    model.log_prob_gradient(x, m, score[bits], 1.0);
    exact.add(score[bits], prob[bits] * reward[bits]);
    identity.add(score[bits], prob[bits]);
  }

  PolicyOracleResult result;
  result.score_identity_norm = identity.norm();

  // Directions: the exact expectation itself and a few fixed random ones.
  std::vector<nn::GradSet> dirs{exact};
  Rng dir_rng(seed ^ 0x64697273ULL);
  for (int k = 0; k < 4; ++k) {
    nn::GradSet v(model.params());
    for (std::size_t t = 0; t < v.size(); ++t) {
      for (Eigen::Index j = 0; j < v.at(t).size(); ++j) v.at(t).data()[j] = dir_rng.uniform(-1, 1);
    }
    dirs.push_back(v);
  }
  for (auto& v : dirs) v.scale(1.0 / v.norm());

  std::vector<std::array<double, 16>> proj(dirs.size());
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    for (unsigned bits = 0; bits < 16; ++bits) {
      nn::GradSet est(model.params());
      policy_gradient(score[bits], reward[bits], baseline, est);
      proj[k][bits] = est.dot(dirs[k]);
    }
  }

  Rng rng(seed ^ 0x6d6f6e74ULL);
  std::vector<double> sum(dirs.size(), 0.0);
  std::vector<double> sum2(dirs.size(), 0.0);
  for (int s = 0; s < samples; ++s) {
    const auto m = draw_mask(probs, rng);
    unsigned bits = 0;
    for (unsigned i = 0; i < 4; ++i) bits |= static_cast<unsigned>(m[i]) << i;
    for (std::size_t k = 0; k < dirs.size(); ++k) {
      sum[k] += proj[k][bits];
      sum2[k] += proj[k][bits] * proj[k][bits];
    }
  }
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    const double mean = sum[k] / samples;
    const double var = sum2[k] / samples - mean * mean;
    const double se = std::sqrt(var / samples);
    const double z = std::abs(mean - exact.dot(dirs[k])) / se;
    result.worst_z = std::max(result.worst_z, z);
    ++result.directions;
  }
  return result;
}

}  // namespace cycletrans::testing
