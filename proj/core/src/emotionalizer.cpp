#include "cycletrans/emotionalizer.hpp"
#include "cycletrans/neutralizer.hpp"

#include <cmath>

#include "cycletrans/error.hpp"
#include "cycletrans/nn/ops.hpp"
#include "cycletrans/random.hpp"
#include "model_io.hpp"

namespace cycletrans {

using nn::Vector;

Emotionalizer::Emotionalizer(const ModelDims& dims) : dims_(dims) {
  if (dims.vocab_size <= Vocabulary::kEos || dims.embedding_size <= 0 || dims.hidden_size <= 0) {
    throw ValidationError("emotionalizer dimensions must be positive");
  }
  const int v = dims.vocab_size;
  const int e = dims.embedding_size;
  const int h = dims.hidden_size;
  enc_embedding_ = nn::Embedding::create(params_, "encoder/embedding", v, e);
  enc_lstm_ = nn::LstmLayer::create(params_, "encoder/lstm", e, h);
  for (Sentiment s : {Sentiment::kNegative, Sentiment::kPositive}) {
    const std::string prefix = "decoder_" + std::string(to_string(s)) + "/";
    auto& d = decoders_[static_cast<std::size_t>(class_index(s))];
    d.embedding = nn::Embedding::create(params_, prefix + "embedding", v, e);
    d.lstm = nn::LstmLayer::create(params_, prefix + "lstm", e + h, h);
    d.output = nn::Linear::create(params_, prefix + "output", h, v);
  }
  Rng rng(dims.seed);
  params_.init_uniform(dims.init_scale, rng);
  optimizer_ = nn::Adagrad(params_);
}

Vector Emotionalizer::decoder_input(const Decoder& d, TokenId prev, const Vector& content) const {
  Vector x(dims_.embedding_size + dims_.hidden_size);
  x << d.embedding.lookup(params_, prev), content;
  return x;
}

Vector Emotionalizer::encode_content(std::span<const TokenId> kept_tokens) const {
  if (kept_tokens.empty()) throw PreconditionError("emotionalizer input is empty");
  const auto inputs = enc_embedding_.lookup(params_, kept_tokens);
  return enc_lstm_.run(params_, inputs).last_h();
}

GeneratedSentence Emotionalizer::decode(const Vector& content, Sentiment s, int max_len) const {
  const auto& d = decoder(s);
  GeneratedSentence out;
  out.target = s;
  Vector h = content;
  Vector c = Vector::Zero(dims_.hidden_size);
  TokenId prev = Vocabulary::kBos;
  for (int t = 0; t < max_len; ++t) {
    const auto step = d.lstm.step(params_, decoder_input(d, prev, content), h, c);
    const Vector logp = nn::log_softmax(d.output.forward(params_, step.h));
    Eigen::Index best = 0;
    logp.maxCoeff(&best);
    out.step_log_probs.push_back(logp(best));
    if (best == Vocabulary::kEos) break;
    out.tokens.push_back(static_cast<TokenId>(best));
    prev = static_cast<TokenId>(best);
    h = step.h;
    c = step.c;
  }
  return out;
}

GeneratedSentence Emotionalizer::generate(std::span<const TokenId> kept_tokens, Sentiment s,
                                          int max_len) const {
  return decode(encode_content(kept_tokens), s, max_len);
}

double Emotionalizer::reconstruction_logprob(std::span<const TokenId> target,
                                             std::span<const TokenId> kept_tokens,
                                             Sentiment s) const {
  const auto& d = decoder(s);
  const Vector content = encode_content(kept_tokens);
  Vector h = content;
  Vector c = Vector::Zero(dims_.hidden_size);
  TokenId prev = Vocabulary::kBos;
  double lp = 0.0;
  for (std::size_t t = 0; t <= target.size(); ++t) {
    const TokenId next = t < target.size() ? target[t] : Vocabulary::kEos;
    const auto step = d.lstm.step(params_, decoder_input(d, prev, content), h, c);
    lp += nn::log_softmax(d.output.forward(params_, step.h))(next);
    prev = next;
    h = step.h;
    c = step.c;
  }
  return lp;
}

double Emotionalizer::reconstruction_gradient(std::span<const TokenId> target,
                                              std::span<const TokenId> kept_tokens, Sentiment s,
                                              nn::GradSet& grads, double scale) const {
  if (kept_tokens.empty()) throw PreconditionError("emotionalizer input is empty");
  const auto& d = decoder(s);
  const auto enc_inputs = enc_embedding_.lookup(params_, kept_tokens);
  const auto enc_trace = enc_lstm_.run(params_, enc_inputs);

  // Decoder inputs: <s> x_1..x_T ; targets: x_1..x_T </s>
  std::vector<TokenId> dec_in;
  dec_in.reserve(target.size() + 1);
  dec_in.push_back(Vocabulary::kBos);
  dec_in.insert(dec_in.end(), target.begin(), target.end());
  const Vector& content = enc_trace.last_h();
  std::vector<Vector> dec_inputs;
  dec_inputs.reserve(dec_in.size());
  for (TokenId tok : dec_in) dec_inputs.push_back(decoder_input(d, tok, content));
  const auto dec_trace = d.lstm.run(params_, dec_inputs, content, Vector::Zero(dims_.hidden_size));

  double lp = 0.0;
  std::vector<Vector> dh(dec_in.size());
  for (std::size_t t = 0; t < dec_in.size(); ++t) {
    const TokenId next = t < target.size() ? target[t] : Vocabulary::kEos;
    const auto& ht = dec_trace.steps[t].h;
    const Vector logits = d.output.forward(params_, ht);
    const Vector logp = nn::log_softmax(logits);
    lp += logp(next);
    Vector dlogits = -logp.array().exp().matrix();
    dlogits(next) += 1.0;
    dlogits *= scale;
    dh[t] = d.output.backward(params_, ht, dlogits, grads);
  }
  const auto dec_grads = d.lstm.backward(params_, dec_trace, dh, grads);
  const Eigen::Index e = dims_.embedding_size;
  Vector dcontent = dec_grads.dh0;
  std::vector<Vector> demb(dec_in.size());
  for (std::size_t t = 0; t < dec_in.size(); ++t) {
    demb[t] = dec_grads.dx[t].head(e);
    dcontent += dec_grads.dx[t].tail(dims_.hidden_size);
  }
  d.embedding.backward(dec_in, demb, grads);

  std::vector<Vector> enc_dh(kept_tokens.size());
  enc_dh.back() = dcontent;
  const auto enc_grads = enc_lstm_.backward(params_, enc_trace, enc_dh, grads);
  enc_embedding_.backward(kept_tokens, enc_grads.dx, grads);
  return lp;
}

std::vector<std::size_t> Emotionalizer::decoder_param_indices(Sentiment s) const {
  const auto& d = decoder(s);
  return {d.embedding.table.index, d.lstm.weight.index, d.lstm.bias.index,
          d.output.weight.index, d.output.bias.index};
}

void Emotionalizer::save(const std::filesystem::path& path, std::uint64_t vocab_fingerprint) const {
  nn::Checkpoint ckpt;
  ckpt.kind = "emotionalizer";
  ckpt.vocab_fingerprint = vocab_fingerprint;
  ckpt.seed = dims_.seed;
  ckpt.metadata = detail::dims_to_json(dims_).dump();
  nn::store_params(ckpt, params_, optimizer_.accumulators());
  ckpt.save(path);
}

Emotionalizer Emotionalizer::load(const std::filesystem::path& path,
                                  std::uint64_t* vocab_fingerprint) {
  const auto ckpt = nn::Checkpoint::load(path);
  const auto meta = detail::checkpoint_metadata(ckpt, "emotionalizer", path);
  Emotionalizer model(detail::dims_from_json(meta, ckpt.seed));
  nn::restore_params(ckpt, model.params_, &model.optimizer_.accumulators());
  if (model.optimizer_.accumulators().empty()) model.optimizer_ = nn::Adagrad(model.params_);
  if (vocab_fingerprint) *vocab_fingerprint = ckpt.vocab_fingerprint;
  return model;
}

std::vector<double> pretrain_emotionalizer(Emotionalizer& model, const AttnClassifier& classifier,
                                           std::span<const Example> data,
                                           const nn::EpochOptions& options) {
  if (options.epochs <= 0) return {};
  if (!classifier.trained()) {
    throw PreconditionError("emotionalizer pre-training needs a trained classifier");
  }
  if (data.empty()) throw PreconditionError("emotionalizer pre-training needs data");
  std::vector<std::vector<TokenId>> inputs;
  inputs.reserve(data.size());
  for (const auto& ex : data) {
    inputs.push_back(apply_mask(ex.tokens, classifier.classify(ex.tokens).attention.mask));
  }
  return nn::run_epochs(
      model.params(), model.optimizer(), data.size(), options,
      [&](std::size_t i, nn::GradSet& g, double scale) {
        return -model.reconstruction_gradient(data[i].tokens, inputs[i], data[i].sentiment, g,
                                              -scale);
      },
      "emotionalizer");
}

double cycle_update(Emotionalizer& model, std::span<const TokenId> x,
                    std::span<const TokenId> kept_tokens, Sentiment s, double learning_rate,
                    double clip_norm) {
  nn::GradSet grads(model.params());
  // Loss is -log P, so the descent step below ascends log P.
  const double lp = model.reconstruction_gradient(x, kept_tokens, s, grads, -1.0);
  if (!std::isfinite(lp) || !grads.all_finite()) {
    throw TrainingError("non-finite reconstruction gradient in cycle update");
  }
  nn::clip_global_norm(grads, clip_norm);
  model.optimizer().step(model.params(), grads, learning_rate);
  return lp;
}

}  // namespace cycletrans
