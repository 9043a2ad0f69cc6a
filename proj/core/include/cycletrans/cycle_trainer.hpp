#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cycletrans/attn_classifier.hpp"
#include "cycletrans/corpus.hpp"
#include "cycletrans/emotionalizer.hpp"
#include "cycletrans/neutralizer.hpp"
#include "cycletrans/nn/params.hpp"
#include "cycletrans/random.hpp"
#include "cycletrans/reward.hpp"

namespace cycletrans {

/// Hyperparameters of the whole pipeline. Defaults are the published Yelp
/// settings.
struct TrainConfig {
  int iterations = 10000;
  int batch_size = 64;
  double learning_rate = 0.6;
  int hidden_size = 256;
  int embedding_size = 128;
  std::size_t vocab_cap = 50000;
  double clip_norm = 2.0;
  double beta = kDefaultHarmonicBeta;
  int classifier_epochs = 10;
  int neutralizer_epochs = 1;
  int emotionalizer_epochs = 4;
  std::uint64_t seed = 1;
  double baseline_decay = 0.95;
  bool use_baseline = true;
  int max_decode_length = kDefaultMaxDecodeLength;
  /// Checkpoint cadence in iterations; 0 writes only the final triplet.
  int checkpoint_every = 0;
  int workers = 1;

  static TrainConfig yelp();
  static TrainConfig amazon();
  /// Small configuration for the template corpus from synth_corpus.
  static TrainConfig synthetic();

  /// Throws ValidationError unless every size, rate and count is positive.
  void validate() const;
  std::string to_json() const;
  static TrainConfig from_json(std::string_view text);
};

/// Exponential moving average of the combined reward.
struct BaselineState {
  double value = 0.0;
  double decay = 0.95;
  bool initialized = false;
};

/// b <- decay * b + (1 - decay) * r, or b <- r for the first observation.
BaselineState update_baseline(BaselineState state, double reward);

/// out += (reward - baseline) * score, where score = grad log P(mask | x).
void policy_gradient(const nn::GradSet& score, double reward, double baseline, nn::GradSet& out);

/// Mean rewards of one cycled iteration; one line of the reward log.
struct IterationLog {
  int iteration = 0;
  double mean_r1 = 0.0;
  double mean_r2 = 0.0;
  double mean_rc = 0.0;
  double baseline = 0.0;

  std::string to_json_line() const;
};

struct ModelBundle {
  AttnClassifier classifier;
  Neutralizer neutralizer;
  Emotionalizer emotionalizer;

  /// Fresh models sized by `config` with per-model seeds derived from config.seed.
  static ModelBundle create(const TrainConfig& config, int vocab_size);
};

/// Cycled reinforcement learning over pre-trained models. The classifier is
/// frozen and only supplies confidences.
class CycleTrainer {
 public:
  CycleTrainer(ModelBundle& models, const TrainConfig& config);

  /// One iteration over a minibatch: for every sentence sample a mask,
  /// neutralize, reconstruct with the source sentiment (MLE gradient and
  /// R1), transfer with the opposite sentiment (R2), then the policy
  /// gradient of the neutralizer with the combined reward; finally both
  /// updates. `records`, when given, receives the per-sentence rewards.
  IterationLog iteration(std::span<const Example* const> batch, int iteration_index,
                         std::vector<RewardRecord>* records = nullptr);

  /// Single-sentence step with an explicit random source.
  RewardRecord cycle_step(const Example& example, Rng& rng);

  const BaselineState& baseline() const noexcept { return baseline_; }
  const TrainConfig& config() const noexcept { return config_; }

 private:
  struct SentenceOutcome {
    Mask mask;
    RewardRecord reward;
  };
  SentenceOutcome rollout(const Example& example, Rng& rng, nn::GradSet& emotionalizer_grads,
                          double scale) const;
  IterationLog apply(std::span<const Example* const> batch, std::span<SentenceOutcome> outcomes,
                     nn::GradSet& n_grads, nn::GradSet& e_grads, int iteration_index);

  ModelBundle& models_;
  TrainConfig config_;
  BaselineState baseline_;
};

struct TrainHooks {
  /// Receives one JSON line per iteration.
  std::ostream* reward_log = nullptr;
  /// Directory for the checkpoint triplet and config snapshot; empty = none.
  std::filesystem::path checkpoint_dir;
  std::uint64_t vocab_fingerprint = 0;
  std::function<void(const std::string&)> progress;
};

struct TrainResult {
  std::vector<double> classifier_losses;
  std::vector<double> neutralizer_losses;
  std::vector<double> emotionalizer_losses;
  std::vector<IterationLog> log;
};

/// Pre-trains classifier, neutralizer and emotionalizer on `train`, then
/// runs config.iterations cycled iterations over reshuffled minibatches.
TrainResult train(ModelBundle& models, std::span<const Example> train, const TrainConfig& config,
                  const TrainHooks& hooks = {});

/// Epoch options for one pre-training stage of `config`.
nn::EpochOptions pretrain_options(const TrainConfig& config, int epochs, std::uint64_t stream);

void save_bundle(const std::filesystem::path& dir, const ModelBundle& models,
                 const TrainConfig& config, std::uint64_t vocab_fingerprint);

}  // namespace cycletrans
