#include "cycletrans/nn/training.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "cycletrans/error.hpp"
#include "cycletrans/random.hpp"

namespace cycletrans::nn {

std::vector<double> run_epochs(ParamSet& params, Adagrad& optimizer, std::size_t n,
                               const EpochOptions& options, const ExampleLossFn& loss,
                               const std::string& what) {
  std::vector<double> epoch_losses;
  if (options.epochs <= 0 || n == 0) return epoch_losses;
  if (options.batch_size <= 0) throw ValidationError("batch size must be positive");
  if (!optimizer.initialized()) optimizer = Adagrad(params);

  Rng rng(options.seed);
  std::vector<std::size_t> order(n);
  GradSet grads(params);
  const auto batch = static_cast<std::size_t>(options.batch_size);

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      const double scale = 1.0 / static_cast<double>(end - start);
      grads.zero();
      for (std::size_t k = start; k < end; ++k) {
        const double l = loss(order[k], grads, scale);
        if (!std::isfinite(l)) {
          std::ostringstream msg;
          msg << what << ": non-finite loss on example " << order[k] << " in epoch " << epoch + 1;
          throw TrainingError(msg.str());
        }
        total += l;
      }
      if (!grads.all_finite()) {
        std::ostringstream msg;
        msg << what << ": non-finite gradient in epoch " << epoch + 1 << " batch at " << start;
        throw TrainingError(msg.str());
      }
      clip_global_norm(grads, options.clip_norm);
      optimizer.step(params, grads, options.learning_rate);
    }
    const double mean = total / static_cast<double>(n);
    if (!epoch_losses.empty() &&
        mean > epoch_losses.back() * (1.0 + options.max_loss_increase)) {
      std::ostringstream msg;
      msg << what << ": epoch " << epoch + 1 << " mean loss " << mean << " exceeds previous "
          << epoch_losses.back() << " by more than " << options.max_loss_increase * 100 << "%";
      throw TrainingError(msg.str());
    }
    epoch_losses.push_back(mean);
  }
  return epoch_losses;
}

}  // namespace cycletrans::nn
