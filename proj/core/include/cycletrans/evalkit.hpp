#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cycletrans/corpus.hpp"
#include "cycletrans/nn/adagrad.hpp"
#include "cycletrans/nn/layers.hpp"
#include "cycletrans/nn/training.hpp"
#include "cycletrans/sentiment.hpp"

namespace cycletrans {

struct TextCnnConfig {
  int vocab_size = 0;
  int embedding_size = 128;
  std::vector<int> widths{3, 4, 5};
  int filters_per_width = 100;
  std::uint64_t seed = 0;
  double init_scale = 0.1;
};

/// Convolutional sentence classifier used only for evaluation: embeddings,
/// ReLU convolutions of several widths, max-pooling over time, and a two-way
/// softmax. Shares nothing with the attention classifier.
class TextCnn {
 public:
  explicit TextCnn(const TextCnnConfig& config);

  const TextCnnConfig& config() const noexcept { return config_; }

  std::array<double, 2> probabilities(std::span<const TokenId> tokens) const;
  Sentiment predict(std::span<const TokenId> tokens) const;

  double loss_gradient(std::span<const TokenId> tokens, Sentiment label, nn::GradSet& grads,
                       double scale) const;

  nn::ParamSet& params() noexcept { return params_; }
  const nn::ParamSet& params() const noexcept { return params_; }
  nn::Adagrad& optimizer() noexcept { return optimizer_; }

  void save(const std::filesystem::path& path, std::uint64_t vocab_fingerprint) const;
  static TextCnn load(const std::filesystem::path& path, std::uint64_t* vocab_fingerprint = nullptr);

 private:
  struct Forward;
  Forward forward(std::span<const TokenId> tokens) const;

  TextCnnConfig config_;
  nn::ParamSet params_;
  nn::Embedding embedding_;
  std::vector<nn::Linear> convs_;
  nn::Linear output_;
  nn::Adagrad optimizer_;
};

std::vector<double> train_eval_classifier(TextCnn& model, std::span<const Example> data,
                                          const nn::EpochOptions& options);

double eval_classifier_accuracy(const TextCnn& model, std::span<const Example> data);

/// 100 * share of sentences classified as their target sentiment.
double transfer_accuracy(std::span<const std::vector<TokenId>> generated,
                         std::span<const Sentiment> targets, const TextCnn& classifier);

/// Corpus BLEU-4 of generated sentences against their sources, scaled to 0-100.
double content_bleu(std::span<const std::vector<std::string>> generated,
                    std::span<const std::vector<std::string>> sources);

/// Mean smoothed sentence BLEU, scaled to 0-100.
double mean_sentence_bleu(std::span<const std::vector<std::string>> generated,
                          std::span<const std::vector<std::string>> sources);

/// Geometric mean sqrt(acc * bleu).
double g_score(double acc, double bleu);

struct EvalRow {
  std::string source;
  std::string generated;
  Sentiment target = Sentiment::kPositive;
  Sentiment predicted = Sentiment::kPositive;
  double sentence_bleu = 0.0;
};

struct EvalReport {
  double acc = 0.0;
  double bleu = 0.0;
  double g = 0.0;
  double mean_sentence_bleu = 0.0;
  std::vector<EvalRow> rows;

  std::string to_json() const;
  /// Plain-text table with ACC, BLEU and G-score columns.
  std::string to_table(const std::string& system_name) const;
};

/// Full automatic evaluation over aligned source/generated/target lists.
/// Throws ValidationError when the lists differ in length.
EvalReport evaluate(std::span<const std::string> sources, std::span<const std::string> generated,
                    std::span<const Sentiment> targets, const TextCnn& classifier,
                    const Vocabulary& vocab);

}  // namespace cycletrans
