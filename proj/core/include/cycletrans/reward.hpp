#pragma once

#include <span>

#include "cycletrans/bleu.hpp"
#include "cycletrans/vocabulary.hpp"

namespace cycletrans {

inline constexpr double kDefaultHarmonicBeta = 0.5;

/// Weighted harmonic mean of content BLEU and sentiment confidence:
/// (1 + beta^2) * bleu * confid / (beta^2 * bleu + confid), and 0 when the
/// denominator vanishes.
double harmonic_reward(double bleu, double confid, double beta = kDefaultHarmonicBeta);

/// R_c = R_1 + R_2.
inline double combined_reward(double r1, double r2) { return r1 + r2; }

/// Smoothed sentence BLEU of a generated sentence against the source.
inline double reward_bleu(std::span<const TokenId> generated, std::span<const TokenId> source) {
  return sentence_bleu(generated, source);
}

/// Rewards of one sentence in one cycle step. Path 1 regenerates with the
/// source sentiment, path 2 with the opposite one.
struct RewardRecord {
  double bleu1 = 0.0;
  double confid1 = 0.0;
  double r1 = 0.0;
  double bleu2 = 0.0;
  double confid2 = 0.0;
  double r2 = 0.0;
  double rc = 0.0;
  double baseline = 0.0;
};

}  // namespace cycletrans
