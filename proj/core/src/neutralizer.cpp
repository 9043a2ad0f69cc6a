#include "cycletrans/neutralizer.hpp"

#include <algorithm>
#include <cmath>

#include "cycletrans/error.hpp"
#include "cycletrans/nn/ops.hpp"
#include "model_io.hpp"

namespace cycletrans {

using nn::Vector;

double mask_log_prob(std::span<const double> neutral_probs, std::span<const std::uint8_t> mask) {
  if (neutral_probs.size() != mask.size()) throw ValidationError("mask length mismatch");
  double lp = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    lp += std::log(mask[i] ? neutral_probs[i] : 1.0 - neutral_probs[i]);
  }
  return lp;
}

namespace {

Mask argmax_only(std::span<const double> probs) {
  Mask mask(probs.size(), 0);
  const auto best = std::max_element(probs.begin(), probs.end()) - probs.begin();
  mask[static_cast<std::size_t>(best)] = 1;
  return mask;
}

bool is_empty(const Mask& mask) {
  return std::none_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; });
}

}  // namespace

NeutralizedSequence greedy_mask(std::span<const double> neutral_probs) {
  NeutralizedSequence out;
  out.mask.resize(neutral_probs.size());
  for (std::size_t i = 0; i < neutral_probs.size(); ++i) out.mask[i] = neutral_probs[i] >= 0.5;
  if (!neutral_probs.empty() && is_empty(out.mask)) out.mask = argmax_only(neutral_probs);
  out.log_prob = mask_log_prob(neutral_probs, out.mask);
  return out;
}

Mask draw_mask(std::span<const double> neutral_probs, Rng& rng) {
  Mask mask(neutral_probs.size());
  for (std::size_t i = 0; i < neutral_probs.size(); ++i) mask[i] = rng.bernoulli(neutral_probs[i]);
  return mask;
}

NeutralizedSequence sample_mask(std::span<const double> neutral_probs, Rng& rng) {
  NeutralizedSequence out;
  out.mask = draw_mask(neutral_probs, rng);
  for (int retry = 0; retry < kEmptyMaskRetries && is_empty(out.mask); ++retry) {
    out.mask = draw_mask(neutral_probs, rng);
  }
  if (!neutral_probs.empty() && is_empty(out.mask)) out.mask = argmax_only(neutral_probs);
  out.log_prob = mask_log_prob(neutral_probs, out.mask);
  return out;
}

std::vector<TokenId> apply_mask(std::span<const TokenId> tokens,
                                std::span<const std::uint8_t> mask) {
  if (tokens.size() != mask.size()) {
    throw ValidationError("mask length " + std::to_string(mask.size()) + " differs from " +
                          std::to_string(tokens.size()) + " tokens");
  }
  std::vector<TokenId> kept;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (mask[i]) kept.push_back(tokens[i]);
  }
  return kept;
}

struct Neutralizer::Forward {
  nn::LstmTrace trace;
  std::vector<Vector> probs;  // (polar, neutral) per position
};

Neutralizer::Neutralizer(const ModelDims& dims) : dims_(dims) {
  if (dims.vocab_size <= 0 || dims.embedding_size <= 0 || dims.hidden_size <= 0) {
    throw ValidationError("neutralizer dimensions must be positive");
  }
  embedding_ = nn::Embedding::create(params_, "embedding", dims.vocab_size, dims.embedding_size);
  lstm_ = nn::LstmLayer::create(params_, "lstm", dims.embedding_size, dims.hidden_size);
  head_ = nn::Linear::create(params_, "tagger", dims.hidden_size, 2);
  Rng rng(dims.seed);
  params_.init_uniform(dims.init_scale, rng);
  optimizer_ = nn::Adagrad(params_);
}

Neutralizer::Forward Neutralizer::forward(std::span<const TokenId> tokens) const {
  if (tokens.empty()) throw PreconditionError("neutralizer input is empty");
  Forward f;
  const auto inputs = embedding_.lookup(params_, tokens);
  f.trace = lstm_.run(params_, inputs);
  f.probs.reserve(tokens.size());
  for (const auto& s : f.trace.steps) f.probs.push_back(nn::softmax(head_.forward(params_, s.h)));
  return f;
}

std::vector<double> Neutralizer::tag_probabilities(std::span<const TokenId> tokens) const {
  const auto f = forward(tokens);
  std::vector<double> p;
  p.reserve(f.probs.size());
  for (const auto& v : f.probs) p.push_back(v(1));
  return p;
}

NeutralizedSequence Neutralizer::neutralize_greedy(std::span<const TokenId> tokens) const {
  auto out = greedy_mask(tag_probabilities(tokens));
  out.kept_tokens = apply_mask(tokens, out.mask);
  return out;
}

NeutralizedSequence Neutralizer::neutralize_sampled(std::span<const TokenId> tokens,
                                                    Rng& rng) const {
  auto out = sample_mask(tag_probabilities(tokens), rng);
  out.kept_tokens = apply_mask(tokens, out.mask);
  return out;
}

double Neutralizer::log_prob_gradient(std::span<const TokenId> tokens,
                                      std::span<const std::uint8_t> mask, nn::GradSet& grads,
                                      double scale) const {
  if (tokens.size() != mask.size()) throw ValidationError("mask length mismatch");
  const auto f = forward(tokens);
  double lp = 0.0;
  std::vector<Vector> dh(tokens.size());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const int target = mask[t] ? 1 : 0;
    lp += std::log(f.probs[t](target));
    // d log p_target / d logits = onehot - p
    Vector dlogits = -f.probs[t];
    dlogits(target) += 1.0;
    dlogits *= scale;
    dh[t] = head_.backward(params_, f.trace.steps[t].h, dlogits, grads);
  }
  const auto in = lstm_.backward(params_, f.trace, dh, grads);
  embedding_.backward(tokens, in.dx, grads);
  return lp;
}

void Neutralizer::save(const std::filesystem::path& path, std::uint64_t vocab_fingerprint) const {
  nn::Checkpoint ckpt;
  ckpt.kind = "neutralizer";
  ckpt.vocab_fingerprint = vocab_fingerprint;
  ckpt.seed = dims_.seed;
  ckpt.metadata = detail::dims_to_json(dims_).dump();
  nn::store_params(ckpt, params_, optimizer_.accumulators());
  ckpt.save(path);
}

Neutralizer Neutralizer::load(const std::filesystem::path& path, std::uint64_t* vocab_fingerprint) {
  const auto ckpt = nn::Checkpoint::load(path);
  const auto meta = detail::checkpoint_metadata(ckpt, "neutralizer", path);
  Neutralizer model(detail::dims_from_json(meta, ckpt.seed));
  nn::restore_params(ckpt, model.params_, &model.optimizer_.accumulators());
  if (model.optimizer_.accumulators().empty()) model.optimizer_ = nn::Adagrad(model.params_);
  if (vocab_fingerprint) *vocab_fingerprint = ckpt.vocab_fingerprint;
  return model;
}

std::vector<double> pretrain_neutralizer(Neutralizer& model, const AttnClassifier& classifier,
                                         std::span<const Example> data,
                                         const nn::EpochOptions& options) {
  if (options.epochs <= 0) return {};
  if (!classifier.trained()) {
    throw PreconditionError("neutralizer pre-training needs a trained classifier");
  }
  if (data.empty()) throw PreconditionError("neutralizer pre-training needs data");
  std::vector<Mask> targets;
  targets.reserve(data.size());
  for (const auto& ex : data) targets.push_back(classifier.classify(ex.tokens).attention.mask);
  return nn::run_epochs(
      model.params(), model.optimizer(), data.size(), options,
      [&](std::size_t i, nn::GradSet& g, double scale) {
        return -model.log_prob_gradient(data[i].tokens, targets[i], g, -scale);
      },
      "neutralizer");
}

double tagging_agreement(const Neutralizer& model, const AttnClassifier& classifier,
                         std::span<const Example> data) {
  std::size_t agree = 0;
  std::size_t total = 0;
  for (const auto& ex : data) {
    const auto target = classifier.classify(ex.tokens).attention.mask;
    const auto probs = model.tag_probabilities(ex.tokens);
    for (std::size_t i = 0; i < probs.size(); ++i) {
      agree += static_cast<std::size_t>((probs[i] >= 0.5) == (target[i] != 0));
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(agree) / static_cast<double>(total);
}

double emotional_removal_rate(const Neutralizer& model, std::span<const Example> data) {
  std::size_t hit = 0;
  std::size_t total = 0;
  for (const auto& ex : data) {
    if (ex.emotional_positions.empty()) continue;
    const auto mask = model.neutralize_greedy(ex.tokens).mask;
    ++total;
    hit += static_cast<std::size_t>(std::all_of(ex.emotional_positions.begin(),
                                                ex.emotional_positions.end(),
                                                [&](std::size_t p) { return mask.at(p) == 0; }));
  }
  return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
}

}  // namespace cycletrans
