#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cycletrans/corpus.hpp"
#include "cycletrans/model_dims.hpp"
#include "cycletrans/nn/adagrad.hpp"
#include "cycletrans/nn/layers.hpp"
#include "cycletrans/nn/training.hpp"
#include "cycletrans/sentiment.hpp"

namespace cycletrans {

/// Attention weights over a sentence and their mean-threshold mask.
/// mask[i] == 1 marks a neutral (kept) token.
struct AttentionProfile {
  std::vector<double> weights;
  double mean = 0.0;
  std::vector<std::uint8_t> mask;
};

/// Mean-threshold discretization: mask[i] = 1 iff weights[i] <= mean(weights).
/// The minimum never exceeds the mean, so at least one entry is 1.
std::vector<std::uint8_t> discretize(std::span<const double> weights);

AttentionProfile make_attention_profile(std::vector<double> weights);

struct Classification {
  /// Indexed by class_index(Sentiment).
  std::array<double, 2> probs{};
  AttentionProfile attention;

  double prob(Sentiment s) const { return probs[static_cast<std::size_t>(class_index(s))]; }
  Sentiment label() const {
    return probs[1] >= probs[0] ? Sentiment::kPositive : Sentiment::kNegative;
  }
};

/// Self-attention sentiment classifier: an LSTM encoder, bilinear alignment
/// e_i = h_i^T A h_T against the last hidden state, softmax attention,
/// context c = sum_i alpha_i h_i and a two-way softmax output layer.
class AttnClassifier {
 public:
  explicit AttnClassifier(const ModelDims& dims);

  const ModelDims& dims() const noexcept { return dims_; }

  std::vector<nn::Vector> encode(std::span<const TokenId> tokens) const;
  std::vector<double> alignment_scores(std::span<const nn::Vector> hidden) const;
  Classification classify(std::span<const TokenId> tokens) const;

  /// Probability of `s`. Throws PreconditionError on an untrained model.
  double confidence(std::span<const TokenId> tokens, Sentiment s) const;

  /// Cross-entropy of `label`; accumulates scale * d(loss)/d(params).
  double loss_gradient(std::span<const TokenId> tokens, Sentiment label, nn::GradSet& grads,
                       double scale) const;
  double loss(std::span<const TokenId> tokens, Sentiment label) const;

  nn::ParamSet& params() noexcept { return params_; }
  const nn::ParamSet& params() const noexcept { return params_; }
  nn::Adagrad& optimizer() noexcept { return optimizer_; }

  bool trained() const noexcept { return trained_; }
  void set_trained(bool trained) noexcept { trained_ = trained; }

  void save(const std::filesystem::path& path, std::uint64_t vocab_fingerprint) const;
  static AttnClassifier load(const std::filesystem::path& path,
                             std::uint64_t* vocab_fingerprint = nullptr);

 private:
  struct Forward;
  Forward forward(std::span<const TokenId> tokens) const;

  ModelDims dims_;
  nn::ParamSet params_;
  nn::Embedding embedding_;
  nn::LstmLayer lstm_;
  nn::ParamId alignment_;
  nn::Linear output_;
  nn::Adagrad optimizer_;
  bool trained_ = false;
};

/// Minibatch training on cross-entropy. Returns epoch-mean losses. Zero
/// epochs leaves the model untouched.
std::vector<double> train_classifier(AttnClassifier& model, std::span<const Example> data,
                                     const nn::EpochOptions& options);

double classifier_accuracy(const AttnClassifier& model, std::span<const Example> data);

bool passes_confidence_filter(const AttnClassifier& model, const Example& example,
                              double threshold = kMinLabelConfidence);

}  // namespace cycletrans
