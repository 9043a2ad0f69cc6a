#include "cycletrans/attn_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cycletrans/error.hpp"
#include "cycletrans/nn/ops.hpp"
#include "cycletrans/random.hpp"
#include "model_io.hpp"

namespace cycletrans {

using nn::Vector;

std::vector<std::uint8_t> discretize(std::span<const double> weights) {
  if (weights.empty()) return {};
  double sum = 0.0;
  for (double w : weights) sum += w;
  const double mean = sum / static_cast<double>(weights.size());
  // Ties at the mean survive summation rounding.
  const double cutoff = mean + 8 * std::numeric_limits<double>::epsilon() * std::abs(mean);
  std::vector<std::uint8_t> mask(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) mask[i] = weights[i] <= cutoff ? 1 : 0;
  return mask;
}

AttentionProfile make_attention_profile(std::vector<double> weights) {
  AttentionProfile p;
  double sum = 0.0;
  for (double w : weights) sum += w;
  p.mean = weights.empty() ? 0.0 : sum / static_cast<double>(weights.size());
  p.mask = discretize(weights);
  p.weights = std::move(weights);
  return p;
}

struct AttnClassifier::Forward {
  std::vector<TokenId> tokens;
  nn::LstmTrace trace;
  std::vector<Vector> hidden;
  Vector query;  // A h_T
  std::vector<double> scores;
  Vector alpha;
  Vector context;
  Vector probs;
};

AttnClassifier::AttnClassifier(const ModelDims& dims) : dims_(dims) {
  if (dims.vocab_size <= 0 || dims.embedding_size <= 0 || dims.hidden_size <= 0) {
    throw ValidationError("classifier dimensions must be positive");
  }
  embedding_ = nn::Embedding::create(params_, "embedding", dims.vocab_size, dims.embedding_size);
  lstm_ = nn::LstmLayer::create(params_, "lstm", dims.embedding_size, dims.hidden_size);
  alignment_ = params_.add("attention/bilinear", dims.hidden_size, dims.hidden_size);
  output_ = nn::Linear::create(params_, "output", dims.hidden_size, 2);
  Rng rng(dims.seed);
  params_.init_uniform(dims.init_scale, rng);
  optimizer_ = nn::Adagrad(params_);
}

AttnClassifier::Forward AttnClassifier::forward(std::span<const TokenId> tokens) const {
  if (tokens.empty()) throw PreconditionError("classifier input is empty");
  Forward f;
  f.tokens.assign(tokens.begin(), tokens.end());
  const auto inputs = embedding_.lookup(params_, tokens);
  f.trace = lstm_.run(params_, inputs);
  f.hidden.reserve(f.trace.steps.size());
  for (const auto& s : f.trace.steps) f.hidden.push_back(s.h);

  const auto n = static_cast<Eigen::Index>(f.hidden.size());
  f.query = params_[alignment_] * f.hidden.back();
  Vector e(n);
  for (Eigen::Index i = 0; i < n; ++i) e(i) = f.hidden[static_cast<std::size_t>(i)].dot(f.query);
  f.scores.assign(e.data(), e.data() + n);
  f.alpha = nn::softmax(e);
  f.context = Vector::Zero(dims_.hidden_size);
  for (Eigen::Index i = 0; i < n; ++i) f.context += f.alpha(i) * f.hidden[static_cast<std::size_t>(i)];
  f.probs = nn::softmax(output_.forward(params_, f.context));
  return f;
}

std::vector<Vector> AttnClassifier::encode(std::span<const TokenId> tokens) const {
  if (tokens.empty()) throw PreconditionError("classifier input is empty");
  const auto inputs = embedding_.lookup(params_, tokens);
  const auto trace = lstm_.run(params_, inputs);
  std::vector<Vector> hidden;
  hidden.reserve(trace.steps.size());
  for (const auto& s : trace.steps) hidden.push_back(s.h);
  return hidden;
}

std::vector<double> AttnClassifier::alignment_scores(std::span<const Vector> hidden) const {
  if (hidden.empty()) throw PreconditionError("no hidden states to align");
  const Vector query = params_[alignment_] * hidden.back();
  std::vector<double> scores;
  scores.reserve(hidden.size());
  for (const auto& h : hidden) scores.push_back(h.dot(query));
  return scores;
}

Classification AttnClassifier::classify(std::span<const TokenId> tokens) const {
  const auto f = forward(tokens);
  Classification c;
  c.probs = {f.probs(0), f.probs(1)};
  c.attention = make_attention_profile(
      std::vector<double>(f.alpha.data(), f.alpha.data() + f.alpha.size()));
  return c;
}

double AttnClassifier::confidence(std::span<const TokenId> tokens, Sentiment s) const {
  if (!trained_) throw PreconditionError("classifier confidence requested before training");
  return classify(tokens).prob(s);
}

double AttnClassifier::loss(std::span<const TokenId> tokens, Sentiment label) const {
  const auto f = forward(tokens);
  return -std::log(f.probs(class_index(label)));
}

double AttnClassifier::loss_gradient(std::span<const TokenId> tokens, Sentiment label,
                                     nn::GradSet& grads, double scale) const {
  const auto f = forward(tokens);
  const int y = class_index(label);
  const double loss = -std::log(f.probs(y));

  Vector dlogits = f.probs;
  dlogits(y) -= 1.0;
  dlogits *= scale;
  const Vector dcontext = output_.backward(params_, f.context, dlogits, grads);

  const std::size_t n = f.hidden.size();
  std::vector<Vector> dh(n);
  Vector dalpha(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    dalpha(static_cast<Eigen::Index>(i)) = f.hidden[i].dot(dcontext);
    dh[i] = f.alpha(static_cast<Eigen::Index>(i)) * dcontext;
  }
  const Vector de = nn::softmax_backward(f.alpha, dalpha);

  // e_i = h_i . (A h_T)
  Vector dquery = Vector::Zero(dims_.hidden_size);
  for (std::size_t i = 0; i < n; ++i) {
    const double dei = de(static_cast<Eigen::Index>(i));
    dh[i] += dei * f.query;
    dquery += dei * f.hidden[i];
  }
  grads[alignment_].noalias() += dquery * f.hidden.back().transpose();
  dh.back() += params_[alignment_].transpose() * dquery;

  const auto in = lstm_.backward(params_, f.trace, dh, grads);
  embedding_.backward(f.tokens, in.dx, grads);
  return loss;
}

void AttnClassifier::save(const std::filesystem::path& path, std::uint64_t vocab_fingerprint) const {
  nn::Checkpoint ckpt;
  ckpt.kind = "classifier";
  ckpt.vocab_fingerprint = vocab_fingerprint;
  ckpt.seed = dims_.seed;
  auto meta = detail::dims_to_json(dims_);
  meta["trained"] = trained_;
  ckpt.metadata = meta.dump();
  nn::store_params(ckpt, params_, optimizer_.accumulators());
  ckpt.save(path);
}

AttnClassifier AttnClassifier::load(const std::filesystem::path& path,
                                    std::uint64_t* vocab_fingerprint) {
  const auto ckpt = nn::Checkpoint::load(path);
  const auto meta = detail::checkpoint_metadata(ckpt, "classifier", path);
  AttnClassifier model(detail::dims_from_json(meta, ckpt.seed));
  nn::restore_params(ckpt, model.params_, &model.optimizer_.accumulators());
  if (model.optimizer_.accumulators().empty()) model.optimizer_ = nn::Adagrad(model.params_);
  model.trained_ = meta.value("trained", false);
  if (vocab_fingerprint) *vocab_fingerprint = ckpt.vocab_fingerprint;
  return model;
}

std::vector<double> train_classifier(AttnClassifier& model, std::span<const Example> data,
                                     const nn::EpochOptions& options) {
  if (options.epochs <= 0) return {};
  if (data.empty()) throw PreconditionError("classifier training needs a nonempty dataset");
  auto losses = nn::run_epochs(
      model.params(), model.optimizer(), data.size(), options,
      [&](std::size_t i, nn::GradSet& g, double scale) {
        return model.loss_gradient(data[i].tokens, data[i].sentiment, g, scale);
      },
      "classifier");
  model.set_trained(true);
  return losses;
}

double classifier_accuracy(const AttnClassifier& model, std::span<const Example> data) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : data) {
    if (model.classify(ex.tokens).label() == ex.sentiment) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

bool passes_confidence_filter(const AttnClassifier& model, const Example& example,
                              double threshold) {
  return confidence_filter(model.confidence(example.tokens, example.sentiment), threshold);
}

}  // namespace cycletrans
