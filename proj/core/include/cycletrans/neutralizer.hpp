#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cycletrans/attn_classifier.hpp"
#include "cycletrans/corpus.hpp"
#include "cycletrans/model_dims.hpp"
#include "cycletrans/nn/adagrad.hpp"
#include "cycletrans/nn/layers.hpp"
#include "cycletrans/nn/training.hpp"
#include "cycletrans/random.hpp"

namespace cycletrans {

using Mask = std::vector<std::uint8_t>;

/// A mask over a sentence (1 = neutral, kept) and its log-probability under
/// the tagger. `kept_tokens` is filled when the source tokens are known.
struct NeutralizedSequence {
  Mask mask;
  std::vector<TokenId> kept_tokens;
  double log_prob = 0.0;
};

/// sum_i [m_i log p_i + (1 - m_i) log(1 - p_i)]
double mask_log_prob(std::span<const double> neutral_probs, std::span<const std::uint8_t> mask);

/// Keeps positions with p >= 0.5. An all-zero result keeps the single
/// most probable position instead.
NeutralizedSequence greedy_mask(std::span<const double> neutral_probs);

/// Independent Bernoulli draw per position, no empty-mask handling.
Mask draw_mask(std::span<const double> neutral_probs, Rng& rng);

inline constexpr int kEmptyMaskRetries = 3;

/// draw_mask, redrawn up to three times while empty; after that the most
/// probable position alone is kept. log_prob is that of the returned mask.
NeutralizedSequence sample_mask(std::span<const double> neutral_probs, Rng& rng);

/// Order-preserving selection of tokens whose mask entry is 1.
std::vector<TokenId> apply_mask(std::span<const TokenId> tokens, std::span<const std::uint8_t> mask);

/// Neutralization tagger: one LSTM over the sentence with an independent
/// two-way softmax (polar, neutral) per position.
class Neutralizer {
 public:
  explicit Neutralizer(const ModelDims& dims);

  const ModelDims& dims() const noexcept { return dims_; }

  /// Per-token probability of NEUTRAL.
  std::vector<double> tag_probabilities(std::span<const TokenId> tokens) const;

  NeutralizedSequence neutralize_greedy(std::span<const TokenId> tokens) const;
  NeutralizedSequence neutralize_sampled(std::span<const TokenId> tokens, Rng& rng) const;

  /// Accumulates scale * grad_theta log P(mask | tokens); returns log P.
  double log_prob_gradient(std::span<const TokenId> tokens, std::span<const std::uint8_t> mask,
                           nn::GradSet& grads, double scale) const;

  nn::ParamSet& params() noexcept { return params_; }
  const nn::ParamSet& params() const noexcept { return params_; }
  nn::Adagrad& optimizer() noexcept { return optimizer_; }

  void save(const std::filesystem::path& path, std::uint64_t vocab_fingerprint) const;
  static Neutralizer load(const std::filesystem::path& path,
                          std::uint64_t* vocab_fingerprint = nullptr);

 private:
  struct Forward;
  Forward forward(std::span<const TokenId> tokens) const;

  ModelDims dims_;
  nn::ParamSet params_;
  nn::Embedding embedding_;
  nn::LstmLayer lstm_;
  nn::Linear head_;
  nn::Adagrad optimizer_;
};

/// Trains on -sum_i log P(target_i | x) with targets from the classifier's
/// discretized attention. Returns epoch-mean losses.
std::vector<double> pretrain_neutralizer(Neutralizer& model, const AttnClassifier& classifier,
                                         std::span<const Example> data,
                                         const nn::EpochOptions& options);

/// Share of tokens whose greedy tag agrees with the classifier's mask.
double tagging_agreement(const Neutralizer& model, const AttnClassifier& classifier,
                         std::span<const Example> data);

/// Share of sentences whose emotional positions are all removed by the
/// greedy mask. Sentences without ground truth are skipped.
double emotional_removal_rate(const Neutralizer& model, std::span<const Example> data);

}  // namespace cycletrans
