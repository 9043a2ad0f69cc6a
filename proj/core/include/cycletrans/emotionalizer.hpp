#pragma once

#include <array>
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
#include "cycletrans/sentiment.hpp"

namespace cycletrans {

inline constexpr int kDefaultMaxDecodeLength = 20;

struct GeneratedSentence {
  std::vector<TokenId> tokens;        // without the end marker
  std::vector<double> step_log_probs;  // one per emitted token, plus the end marker if emitted
  Sentiment target = Sentiment::kPositive;
};

/// Emotionalization model: a shared LSTM encoder compresses the neutral
/// content into its final hidden state; one of two LSTM decoders (chosen by
/// the target sentiment) regenerates a sentence from that vector. The
/// decoders share no parameters with each other.
class Emotionalizer {
 public:
  explicit Emotionalizer(const ModelDims& dims);

  const ModelDims& dims() const noexcept { return dims_; }

  nn::Vector encode_content(std::span<const TokenId> kept_tokens) const;

  /// Greedy decoding, stopping at </s> or after `max_len` tokens.
  GeneratedSentence decode(const nn::Vector& content, Sentiment s,
                           int max_len = kDefaultMaxDecodeLength) const;
  GeneratedSentence generate(std::span<const TokenId> kept_tokens, Sentiment s,
                             int max_len = kDefaultMaxDecodeLength) const;

  /// Teacher-forced sum of log P(x_i | x_<i, content, s) over the target
  /// tokens and the closing </s>.
  double reconstruction_logprob(std::span<const TokenId> target,
                                std::span<const TokenId> kept_tokens, Sentiment s) const;

  /// Same value; also accumulates scale * grad_phi of it.
  double reconstruction_gradient(std::span<const TokenId> target,
                                 std::span<const TokenId> kept_tokens, Sentiment s,
                                 nn::GradSet& grads, double scale) const;

  nn::ParamSet& params() noexcept { return params_; }
  const nn::ParamSet& params() const noexcept { return params_; }
  nn::Adagrad& optimizer() noexcept { return optimizer_; }

  /// Parameter indices owned by the decoder for `s`.
  std::vector<std::size_t> decoder_param_indices(Sentiment s) const;

  void save(const std::filesystem::path& path, std::uint64_t vocab_fingerprint) const;
  static Emotionalizer load(const std::filesystem::path& path,
                            std::uint64_t* vocab_fingerprint = nullptr);

 private:
  struct Decoder {
    nn::Embedding embedding;
    nn::LstmLayer lstm;
    nn::Linear output;
  };
  /// [embedding(prev); content]
  nn::Vector decoder_input(const Decoder& d, TokenId prev, const nn::Vector& content) const;
  const Decoder& decoder(Sentiment s) const { return decoders_[static_cast<std::size_t>(class_index(s))]; }

  ModelDims dims_;
  nn::ParamSet params_;
  nn::Embedding enc_embedding_;
  nn::LstmLayer enc_lstm_;
  std::array<Decoder, 2> decoders_;
  nn::Adagrad optimizer_;
};

/// Reconstruction pre-training: the input is the sentence with the
/// classifier's above-mean attention words removed, the target the sentence
/// itself, routed through its own sentiment's decoder.
std::vector<double> pretrain_emotionalizer(Emotionalizer& model, const AttnClassifier& classifier,
                                           std::span<const Example> data,
                                           const nn::EpochOptions& options);

/// One ascent step on log P(x | kept, s) with gradient clipping. Throws
/// TrainingError on a non-finite gradient. Returns the log-likelihood
/// before the step.
double cycle_update(Emotionalizer& model, std::span<const TokenId> x,
                    std::span<const TokenId> kept_tokens, Sentiment s, double learning_rate,
                    double clip_norm = 2.0);

}  // namespace cycletrans
