#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cycletrans/nn/adagrad.hpp"
#include "cycletrans/nn/params.hpp"

namespace cycletrans::nn {

struct EpochOptions {
  int epochs = 1;
  int batch_size = 64;
  double learning_rate = 0.6;
  double clip_norm = 2.0;
  std::uint64_t seed = 0;
  /// Largest tolerated relative increase of the epoch-mean loss.
  double max_loss_increase = 0.05;
};

/// Loss of example `index`; accumulates `scale * dLoss/dparams` into `grads`.
using ExampleLossFn = std::function<double(std::size_t index, GradSet& grads, double scale)>;

/// Shuffled minibatch Adagrad over `n` examples with gradient clipping.
/// Returns epoch-mean losses. Throws TrainingError on a non-finite loss or
/// gradient, or when an epoch's mean loss exceeds the previous one by more
/// than `max_loss_increase` (relative). `what` names the model in messages.
std::vector<double> run_epochs(ParamSet& params, Adagrad& optimizer, std::size_t n,
                               const EpochOptions& options, const ExampleLossFn& loss,
                               const std::string& what);

}  // namespace cycletrans::nn
