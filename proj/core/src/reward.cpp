#include "cycletrans/reward.hpp"

#include "cycletrans/error.hpp"

namespace cycletrans {

double harmonic_reward(double bleu, double confid, double beta) {
  if (!(beta > 0.0)) throw ValidationError("harmonic weight beta must be positive");
  const double b2 = beta * beta;
  const double denom = b2 * bleu + confid;
  if (denom <= 0.0) return 0.0;
  return (1.0 + b2) * bleu * confid / denom;
}

}  // namespace cycletrans
