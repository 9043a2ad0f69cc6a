#include "cycletrans/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cycletrans/bleu.hpp"
#include "cycletrans/error.hpp"
#include "cycletrans/nn/checkpoint.hpp"
#include "cycletrans/nn/ops.hpp"
#include "cycletrans/random.hpp"
#include "model_io.hpp"

namespace cycletrans {

using nn::Vector;

struct TextCnn::Forward {
  std::vector<TokenId> padded;
  std::vector<Vector> embedded;
  // Per width: winning window start per filter and the pooled ReLU value.
  std::vector<std::vector<std::size_t>> argmax;
  Vector features;
  Vector probs;
};

TextCnn::TextCnn(const TextCnnConfig& config) : config_(config) {
  if (config.vocab_size <= 0 || config.embedding_size <= 0 || config.filters_per_width <= 0 ||
      config.widths.empty()) {
    throw ValidationError("TextCNN dimensions must be positive");
  }
  embedding_ = nn::Embedding::create(params_, "embedding", config.vocab_size, config.embedding_size);
  for (int w : config.widths) {
    if (w <= 0) throw ValidationError("convolution width must be positive");
    convs_.push_back(nn::Linear::create(params_, "conv" + std::to_string(w),
                                        w * config.embedding_size, config.filters_per_width));
  }
  output_ = nn::Linear::create(
      params_, "output", config.filters_per_width * static_cast<int>(config.widths.size()), 2);
  Rng rng(config.seed);
  params_.init_uniform(config.init_scale, rng);
  optimizer_ = nn::Adagrad(params_);
}

TextCnn::Forward TextCnn::forward(std::span<const TokenId> tokens) const {
  if (tokens.empty()) throw PreconditionError("TextCNN input is empty");
  Forward f;
  const auto max_width = static_cast<std::size_t>(*std::max_element(config_.widths.begin(), config_.widths.end()));
  f.padded.assign(tokens.begin(), tokens.end());
  if (f.padded.size() < max_width) f.padded.resize(max_width, Vocabulary::kPad);
  f.embedded = embedding_.lookup(params_, f.padded);

  const int e = config_.embedding_size;
  const int nf = config_.filters_per_width;
  f.features = Vector::Zero(nf * static_cast<Eigen::Index>(convs_.size()));
  f.argmax.resize(convs_.size());
  for (std::size_t k = 0; k < convs_.size(); ++k) {
    const auto w = static_cast<std::size_t>(config_.widths[k]);
    const std::size_t positions = f.padded.size() - w + 1;
    Vector window(static_cast<Eigen::Index>(w) * e);
    Vector best = Vector::Constant(nf, -std::numeric_limits<double>::infinity());
    f.argmax[k].assign(static_cast<std::size_t>(nf), 0);
    for (std::size_t p = 0; p < positions; ++p) {
      for (std::size_t j = 0; j < w; ++j) window.segment(static_cast<Eigen::Index>(j) * e, e) = f.embedded[p + j];
      const Vector z = convs_[k].forward(params_, window);
      for (int q = 0; q < nf; ++q) {
        if (z(q) > best(q)) {
          best(q) = z(q);
          f.argmax[k][static_cast<std::size_t>(q)] = p;
        }
      }
    }
    f.features.segment(static_cast<Eigen::Index>(k) * nf, nf) = best.cwiseMax(0.0);
  }
  f.probs = nn::softmax(output_.forward(params_, f.features));
  return f;
}

std::array<double, 2> TextCnn::probabilities(std::span<const TokenId> tokens) const {
  const auto f = forward(tokens);
  return {f.probs(0), f.probs(1)};
}

Sentiment TextCnn::predict(std::span<const TokenId> tokens) const {
  const auto p = probabilities(tokens);
  return p[1] >= p[0] ? Sentiment::kPositive : Sentiment::kNegative;
}

double TextCnn::loss_gradient(std::span<const TokenId> tokens, Sentiment label, nn::GradSet& grads,
                              double scale) const {
  const auto f = forward(tokens);
  const int y = class_index(label);
  Vector dlogits = f.probs;
  dlogits(y) -= 1.0;
  dlogits *= scale;
  const Vector dfeatures = output_.backward(params_, f.features, dlogits, grads);

  const int e = config_.embedding_size;
  const int nf = config_.filters_per_width;
  for (std::size_t k = 0; k < convs_.size(); ++k) {
    const auto w = static_cast<std::size_t>(config_.widths[k]);
    const auto& weight = params_[convs_[k].weight];
    for (int q = 0; q < nf; ++q) {
      const double feature = f.features(static_cast<Eigen::Index>(k) * nf + q);
      if (feature <= 0.0) continue;  // ReLU closed
      const double dz = dfeatures(static_cast<Eigen::Index>(k) * nf + q);
      const std::size_t p = f.argmax[k][static_cast<std::size_t>(q)];
      for (std::size_t j = 0; j < w; ++j) {
        const auto col = static_cast<Eigen::Index>(j) * e;
        grads[convs_[k].weight].row(q).segment(col, e) += dz * f.embedded[p + j].transpose();
        grads[embedding_.table].col(f.padded[p + j]) +=
            dz * weight.row(q).segment(col, e).transpose();
      }
      grads[convs_[k].bias](q, 0) += dz;
    }
  }
  return -std::log(f.probs(y));
}

void TextCnn::save(const std::filesystem::path& path, std::uint64_t vocab_fingerprint) const {
  nn::Checkpoint ckpt;
  ckpt.kind = "textcnn";
  ckpt.vocab_fingerprint = vocab_fingerprint;
  ckpt.seed = config_.seed;
  nlohmann::json meta{{"vocab_size", config_.vocab_size},
                      {"embedding_size", config_.embedding_size},
                      {"widths", config_.widths},
                      {"filters_per_width", config_.filters_per_width},
                      {"init_scale", config_.init_scale}};
  ckpt.metadata = meta.dump();
  nn::store_params(ckpt, params_, optimizer_.accumulators());
  ckpt.save(path);
}

TextCnn TextCnn::load(const std::filesystem::path& path, std::uint64_t* vocab_fingerprint) {
  const auto ckpt = nn::Checkpoint::load(path);
  const auto meta = detail::checkpoint_metadata(ckpt, "textcnn", path);
  TextCnnConfig cfg;
  cfg.vocab_size = meta.at("vocab_size").get<int>();
  cfg.embedding_size = meta.at("embedding_size").get<int>();
  cfg.widths = meta.at("widths").get<std::vector<int>>();
  cfg.filters_per_width = meta.at("filters_per_width").get<int>();
  cfg.init_scale = meta.value("init_scale", 0.1);
  cfg.seed = ckpt.seed;
  TextCnn model(cfg);
  nn::restore_params(ckpt, model.params_, &model.optimizer_.accumulators());
  if (model.optimizer_.accumulators().empty()) model.optimizer_ = nn::Adagrad(model.params_);
  if (vocab_fingerprint) *vocab_fingerprint = ckpt.vocab_fingerprint;
  return model;
}

std::vector<double> train_eval_classifier(TextCnn& model, std::span<const Example> data,
                                          const nn::EpochOptions& options) {
  if (options.epochs <= 0) return {};
  if (data.empty()) throw PreconditionError("TextCNN training needs a nonempty dataset");
  return nn::run_epochs(
      model.params(), model.optimizer(), data.size(), options,
      [&](std::size_t i, nn::GradSet& g, double scale) {
        return model.loss_gradient(data[i].tokens, data[i].sentiment, g, scale);
      },
      "textcnn");
}

double eval_classifier_accuracy(const TextCnn& model, std::span<const Example> data) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : data) correct += static_cast<std::size_t>(model.predict(ex.tokens) == ex.sentiment);
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

double transfer_accuracy(std::span<const std::vector<TokenId>> generated,
                         std::span<const Sentiment> targets, const TextCnn& classifier) {
  if (generated.size() != targets.size()) {
    throw ValidationError("transfer_accuracy: " + std::to_string(generated.size()) +
                          " sentences but " + std::to_string(targets.size()) + " targets");
  }
  if (generated.empty()) return 0.0;
  std::size_t match = 0;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    // An empty generation cannot carry the target sentiment.
    if (!generated[i].empty() && classifier.predict(generated[i]) == targets[i]) ++match;
  }
  return 100.0 * static_cast<double>(match) / static_cast<double>(generated.size());
}

double content_bleu(std::span<const std::vector<std::string>> generated,
                    std::span<const std::vector<std::string>> sources) {
  if (generated.size() != sources.size()) {
    throw ValidationError("content_bleu: " + std::to_string(generated.size()) +
                          " sentences but " + std::to_string(sources.size()) + " sources");
  }
  return 100.0 * corpus_bleu<std::string>(generated, sources);
}

double mean_sentence_bleu(std::span<const std::vector<std::string>> generated,
                          std::span<const std::vector<std::string>> sources) {
  if (generated.size() != sources.size()) throw ValidationError("mean_sentence_bleu: length mismatch");
  if (generated.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < generated.size(); ++i) sum += sentence_bleu(generated[i], sources[i]);
  return 100.0 * sum / static_cast<double>(generated.size());
}

double g_score(double acc, double bleu) {
  if (acc < 0.0 || bleu < 0.0) throw ValidationError("g_score needs non-negative inputs");
  return std::sqrt(acc * bleu);
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["acc"] = acc;
  j["bleu"] = bleu;
  j["g_score"] = g;
  j["mean_sentence_bleu"] = mean_sentence_bleu;
  auto& rows_json = j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"source", r.source},
                         {"generated", r.generated},
                         {"target", std::string(to_string(r.target))},
                         {"predicted", std::string(to_string(r.predicted))},
                         {"sentence_bleu", r.sentence_bleu}});
  }
  return j.dump(2);
}

std::string EvalReport::to_table(const std::string& system_name) const {
  const auto width = std::max<std::size_t>(system_name.size(), 6);
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-*s | %7s | %7s | %7s\n", static_cast<int>(width), "System",
                "ACC", "BLEU", "G-score");
  out << line << std::string(width + 30, '-') << '\n';
  std::snprintf(line, sizeof line, "%-*s | %7.2f | %7.2f | %7.2f\n", static_cast<int>(width),
                system_name.c_str(), acc, bleu, g);
  out << line;
  return out.str();
}

EvalReport evaluate(std::span<const std::string> sources, std::span<const std::string> generated,
                    std::span<const Sentiment> targets, const TextCnn& classifier,
                    const Vocabulary& vocab) {
  if (sources.size() != generated.size() || sources.size() != targets.size()) {
    throw ValidationError("evaluate: source, generated and target lists differ in length");
  }
  auto tokens_of = [](const std::string& text) {
    try {
      return tokenize(text);
    } catch (const DegenerateInputError&) {
      return std::vector<std::string>{};
    }
  };
  std::vector<std::vector<std::string>> src_tokens;
  std::vector<std::vector<std::string>> gen_tokens;
  std::vector<std::vector<TokenId>> gen_ids;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    src_tokens.push_back(tokens_of(sources[i]));
    gen_tokens.push_back(tokens_of(generated[i]));
    gen_ids.push_back(vocab.encode(gen_tokens.back()));
  }
  EvalReport report;
  report.acc = transfer_accuracy(gen_ids, targets, classifier);
  report.bleu = content_bleu(gen_tokens, src_tokens);
  report.g = g_score(report.acc, report.bleu);
  report.mean_sentence_bleu = mean_sentence_bleu(gen_tokens, src_tokens);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    EvalRow row;
    row.source = sources[i];
    row.generated = generated[i];
    row.target = targets[i];
    row.predicted = gen_ids[i].empty() ? opposite(targets[i]) : classifier.predict(gen_ids[i]);
    row.sentence_bleu = 100.0 * sentence_bleu(gen_tokens[i], src_tokens[i]);
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace cycletrans
