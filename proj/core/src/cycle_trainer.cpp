#include "cycletrans/cycle_trainer.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "cycletrans/error.hpp"
#include "cycletrans/nn/adagrad.hpp"

namespace cycletrans {
namespace {

constexpr std::uint64_t kMaskStream = 0x6d61736bULL;  // "mask"
constexpr std::uint64_t kBatchStream = 0x62617463ULL;  // "batc"

/// Runs fn(worker, begin, end) over contiguous slices of [0, n).
template <class Fn>
void for_slices(std::size_t n, int workers, Fn&& fn) {
  const auto w = static_cast<std::size_t>(std::max(1, std::min<int>(workers, static_cast<int>(n))));
  if (w <= 1) {
    fn(std::size_t{0}, std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(w);
  for (std::size_t k = 0; k < w; ++k) {
    const std::size_t begin = n * k / w;
    const std::size_t end = n * (k + 1) / w;
    threads.emplace_back([&, k, begin, end] {
      try {
        fn(k, begin, end);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::size_t worker_count(int workers, std::size_t n) {
  return static_cast<std::size_t>(std::max(1, std::min<int>(workers, static_cast<int>(std::max<std::size_t>(n, 1)))));
}

}  // namespace

TrainConfig TrainConfig::yelp() { return TrainConfig{}; }

TrainConfig TrainConfig::amazon() {
  TrainConfig c;
  c.neutralizer_epochs = 3;
  c.emotionalizer_epochs = 5;
  return c;
}

TrainConfig TrainConfig::synthetic() {
  TrainConfig c;
  c.iterations = 1000;
  c.batch_size = 16;
  c.hidden_size = 32;
  c.embedding_size = 32;
  c.vocab_cap = 200;
  c.neutralizer_epochs = 5;
  c.emotionalizer_epochs = 60;
  return c;
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(std::string("train config: ") + what + " must be positive");
  };
  require(iterations >= 0, "iterations");
  require(batch_size > 0, "batch_size");
  require(learning_rate >= 0.0, "learning_rate");
  require(hidden_size > 0, "hidden_size");
  require(embedding_size > 0, "embedding_size");
  require(vocab_cap > 0, "vocab_cap");
  require(clip_norm > 0.0, "clip_norm");
  require(beta > 0.0, "beta");
  require(classifier_epochs >= 0 && neutralizer_epochs >= 0 && emotionalizer_epochs >= 0,
          "pre-training epochs");
  require(baseline_decay >= 0.0 && baseline_decay < 1.0, "baseline_decay in [0,1) and");
  require(max_decode_length > 0, "max_decode_length");
  require(checkpoint_every >= 0, "checkpoint_every");
  require(workers > 0, "workers");
}

std::string TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["iterations"] = iterations;
  j["batch_size"] = batch_size;
  j["learning_rate"] = learning_rate;
  j["hidden_size"] = hidden_size;
  j["embedding_size"] = embedding_size;
  j["vocab_cap"] = vocab_cap;
  j["clip_norm"] = clip_norm;
  j["beta"] = beta;
  j["classifier_epochs"] = classifier_epochs;
  j["neutralizer_epochs"] = neutralizer_epochs;
  j["emotionalizer_epochs"] = emotionalizer_epochs;
  j["seed"] = seed;
  j["baseline_decay"] = baseline_decay;
  j["use_baseline"] = use_baseline;
  j["max_decode_length"] = max_decode_length;
  j["checkpoint_every"] = checkpoint_every;
  j["workers"] = workers;
  return j.dump(2);
}

TrainConfig TrainConfig::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("train config is not valid JSON: ") + e.what());
  }
  TrainConfig c;
  c.iterations = j.value("iterations", c.iterations);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.hidden_size = j.value("hidden_size", c.hidden_size);
  c.embedding_size = j.value("embedding_size", c.embedding_size);
  c.vocab_cap = j.value("vocab_cap", c.vocab_cap);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
  c.beta = j.value("beta", c.beta);
  c.classifier_epochs = j.value("classifier_epochs", c.classifier_epochs);
  c.neutralizer_epochs = j.value("neutralizer_epochs", c.neutralizer_epochs);
  c.emotionalizer_epochs = j.value("emotionalizer_epochs", c.emotionalizer_epochs);
  c.seed = j.value("seed", c.seed);
  c.baseline_decay = j.value("baseline_decay", c.baseline_decay);
  c.use_baseline = j.value("use_baseline", c.use_baseline);
  c.max_decode_length = j.value("max_decode_length", c.max_decode_length);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.workers = j.value("workers", c.workers);
  return c;
}

BaselineState update_baseline(BaselineState state, double reward) {
  if (!state.initialized) {
    state.value = reward;
    state.initialized = true;
  } else {
    state.value = state.decay * state.value + (1.0 - state.decay) * reward;
  }
  return state;
}

void policy_gradient(const nn::GradSet& score, double reward, double baseline, nn::GradSet& out) {
  out.add(score, reward - baseline);
}

std::string IterationLog::to_json_line() const {
  nlohmann::ordered_json j;
  j["iteration"] = iteration;
  j["mean_r1"] = mean_r1;
  j["mean_r2"] = mean_r2;
  j["mean_rc"] = mean_rc;
  j["baseline"] = baseline;
  return j.dump();
}

ModelBundle ModelBundle::create(const TrainConfig& config, int vocab_size) {
  auto dims = [&](std::uint64_t stream) {
    ModelDims d;
    d.vocab_size = vocab_size;
    d.embedding_size = config.embedding_size;
    d.hidden_size = config.hidden_size;
    d.seed = derive_seed(config.seed, stream);
    return d;
  };
  return ModelBundle{AttnClassifier(dims(11)), Neutralizer(dims(12)), Emotionalizer(dims(13))};
}

CycleTrainer::CycleTrainer(ModelBundle& models, const TrainConfig& config)
    : models_(models), config_(config) {
  config_.validate();
  baseline_.decay = config_.baseline_decay;
  if (!models_.classifier.trained()) {
    throw PreconditionError("cycled training needs a trained classifier for rewards");
  }
}

CycleTrainer::SentenceOutcome CycleTrainer::rollout(const Example& example, Rng& rng,
                                                    nn::GradSet& emotionalizer_grads,
                                                    double scale) const {
  const auto& x = example.tokens;
  const Sentiment s = example.sentiment;
  const Sentiment flipped = opposite(s);
  const auto& emo = models_.emotionalizer;
  const auto& clf = models_.classifier;

  SentenceOutcome out;
  // Neutralize with a sampled mask.
  const auto neutral = models_.neutralizer.neutralize_sampled(x, rng);
  out.mask = neutral.mask;
  const auto content = emo.encode_content(neutral.kept_tokens);

  // Reconstruct with the source sentiment; its MLE gradient trains the emotionalizer.
  const auto reconstructed = emo.decode(content, s, config_.max_decode_length);
  const double lp = emo.reconstruction_gradient(x, neutral.kept_tokens, s, emotionalizer_grads, -scale);

  auto score = [&](const GeneratedSentence& g, Sentiment target, double& bleu, double& confid) {
    bleu = reward_bleu(g.tokens, x);
    confid = g.tokens.empty() ? 0.0 : clf.confidence(g.tokens, target);
    return harmonic_reward(bleu, confid, config_.beta);
  };
  auto& r = out.reward;
  r.r1 = score(reconstructed, s, r.bleu1, r.confid1);

  // Transfer with the opposite sentiment.
  const auto transferred = emo.decode(content, flipped, config_.max_decode_length);
  r.r2 = score(transferred, flipped, r.bleu2, r.confid2);
  r.rc = combined_reward(r.r1, r.r2);

  if (!std::isfinite(lp) || !std::isfinite(r.rc)) {
    std::ostringstream msg;
    msg << "non-finite " << (std::isfinite(lp) ? "reward" : "reconstruction loss")
        << " on sentence '" << example.raw_text << "'";
    throw TrainingError(msg.str());
  }
  return out;
}

IterationLog CycleTrainer::apply(std::span<const Example* const> batch,
                                 std::span<SentenceOutcome> outcomes, nn::GradSet& n_grads,
                                 nn::GradSet& e_grads, int iteration_index) {
  const double n = static_cast<double>(batch.size());
  IterationLog log;
  log.iteration = iteration_index;
  for (const auto& o : outcomes) {
    log.mean_r1 += o.reward.r1;
    log.mean_r2 += o.reward.r2;
    log.mean_rc += o.reward.rc;
  }
  log.mean_r1 /= n;
  log.mean_r2 /= n;
  log.mean_rc /= n;

  double b = 0.0;
  if (config_.use_baseline) b = baseline_.initialized ? baseline_.value : log.mean_rc;
  log.baseline = b;
  for (auto& o : outcomes) o.reward.baseline = b;

  // Policy gradient of the neutralizer: minimize -(R_c - b) log P(mask | x).
  const std::size_t w = worker_count(config_.workers, batch.size());
  std::vector<nn::GradSet> partial(w, nn::GradSet(models_.neutralizer.params()));
  for_slices(batch.size(), config_.workers, [&](std::size_t k, std::size_t begin, std::size_t end) {
    nn::GradSet score(models_.neutralizer.params());
    for (std::size_t i = begin; i < end; ++i) {
      score.zero();
      models_.neutralizer.log_prob_gradient(batch[i]->tokens, outcomes[i].mask, score, 1.0);
      policy_gradient(score, outcomes[i].reward.rc, b, partial[k]);
    }
  });
  for (const auto& p : partial) n_grads.add(p, -1.0 / n);

  if (config_.use_baseline) baseline_ = update_baseline(baseline_, log.mean_rc);

  if (!n_grads.all_finite() || !e_grads.all_finite()) {
    throw TrainingError("non-finite gradient in cycled iteration " + std::to_string(iteration_index));
  }
  nn::clip_global_norm(n_grads, config_.clip_norm);
  nn::clip_global_norm(e_grads, config_.clip_norm);
  models_.neutralizer.optimizer().step(models_.neutralizer.params(), n_grads, config_.learning_rate);
  models_.emotionalizer.optimizer().step(models_.emotionalizer.params(), e_grads,
                                         config_.learning_rate);
  return log;
}

IterationLog CycleTrainer::iteration(std::span<const Example* const> batch, int iteration_index,
                                     std::vector<RewardRecord>* records) {
  if (batch.empty()) throw PreconditionError("cycled iteration needs a nonempty batch");
  const double scale = 1.0 / static_cast<double>(batch.size());
  std::vector<SentenceOutcome> outcomes(batch.size());
  const std::size_t w = worker_count(config_.workers, batch.size());
  std::vector<nn::GradSet> partial(w, nn::GradSet(models_.emotionalizer.params()));
  for_slices(batch.size(), config_.workers, [&](std::size_t k, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng(derive_seed(config_.seed ^ kMaskStream, static_cast<std::uint64_t>(iteration_index), i));
      outcomes[i] = rollout(*batch[i], rng, partial[k], scale);
    }
  });
  nn::GradSet e_grads(models_.emotionalizer.params());
  for (const auto& p : partial) e_grads.add(p);
  nn::GradSet n_grads(models_.neutralizer.params());
  auto log = apply(batch, outcomes, n_grads, e_grads, iteration_index);
  if (records) {
    records->clear();
    for (const auto& o : outcomes) records->push_back(o.reward);
  }
  return log;
}

RewardRecord CycleTrainer::cycle_step(const Example& example, Rng& rng) {
  nn::GradSet e_grads(models_.emotionalizer.params());
  std::vector<SentenceOutcome> outcomes{rollout(example, rng, e_grads, 1.0)};
  nn::GradSet n_grads(models_.neutralizer.params());
  const Example* batch[] = {&example};
  apply(batch, outcomes, n_grads, e_grads, 0);
  return outcomes.front().reward;
}

nn::EpochOptions pretrain_options(const TrainConfig& config, int epochs, std::uint64_t stream) {
  nn::EpochOptions o;
  o.epochs = epochs;
  o.batch_size = config.batch_size;
  o.learning_rate = config.learning_rate;
  o.clip_norm = config.clip_norm;
  o.seed = derive_seed(config.seed, stream);
  return o;
}

void save_bundle(const std::filesystem::path& dir, const ModelBundle& models,
                 const TrainConfig& config, std::uint64_t vocab_fingerprint) {
  std::filesystem::create_directories(dir);
  models.classifier.save(dir / "classifier.ckpt", vocab_fingerprint);
  models.neutralizer.save(dir / "neutralizer.ckpt", vocab_fingerprint);
  models.emotionalizer.save(dir / "emotionalizer.ckpt", vocab_fingerprint);
  std::ofstream out(dir / "train_config.json");
  out << config.to_json() << '\n';
}

TrainResult train(ModelBundle& models, std::span<const Example> data, const TrainConfig& config,
                  const TrainHooks& hooks) {
  config.validate();
  if (data.empty()) throw PreconditionError("training needs a nonempty dataset");
  auto say = [&](const std::string& msg) {
    if (hooks.progress) hooks.progress(msg);
  };
  TrainResult result;

  result.classifier_losses =
      train_classifier(models.classifier, data, pretrain_options(config, config.classifier_epochs, 1));
  if (!result.classifier_losses.empty()) {
    say("classifier pre-trained, final loss " + std::to_string(result.classifier_losses.back()));
  }
  result.neutralizer_losses = pretrain_neutralizer(
      models.neutralizer, models.classifier, data, pretrain_options(config, config.neutralizer_epochs, 2));
  if (!result.neutralizer_losses.empty()) {
    say("neutralizer pre-trained, final loss " + std::to_string(result.neutralizer_losses.back()));
  }
  result.emotionalizer_losses =
      pretrain_emotionalizer(models.emotionalizer, models.classifier, data,
                             pretrain_options(config, config.emotionalizer_epochs, 3));
  if (!result.emotionalizer_losses.empty()) {
    say("emotionalizer pre-trained, final loss " + std::to_string(result.emotionalizer_losses.back()));
  }
  if (config.iterations == 0) {
    if (!hooks.checkpoint_dir.empty()) {
      save_bundle(hooks.checkpoint_dir, models, config, hooks.vocab_fingerprint);
    }
    return result;
  }

  CycleTrainer trainer(models, config);
  Rng batch_rng(derive_seed(config.seed, kBatchStream));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  batch_rng.shuffle(order);
  std::size_t cursor = 0;
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  std::vector<const Example*> batch;

  for (int it = 1; it <= config.iterations; ++it) {
    batch.clear();
    while (batch.size() < std::min(batch_size, data.size())) {
      if (cursor == order.size()) {
        batch_rng.shuffle(order);
        cursor = 0;
      }
      batch.push_back(&data[order[cursor++]]);
    }
    const auto log = trainer.iteration(batch, it);
    result.log.push_back(log);
    if (hooks.reward_log) *hooks.reward_log << log.to_json_line() << '\n';
    if (it % 50 == 0 || it == config.iterations) {
      std::ostringstream msg;
      msg << "iteration " << it << " mean R1 " << log.mean_r1 << " R2 " << log.mean_r2 << " Rc "
          << log.mean_rc;
      say(msg.str());
    }
    if (!hooks.checkpoint_dir.empty() && config.checkpoint_every > 0 &&
        it % config.checkpoint_every == 0) {
      save_bundle(hooks.checkpoint_dir, models, config, hooks.vocab_fingerprint);
    }
  }
  if (!hooks.checkpoint_dir.empty()) {
    save_bundle(hooks.checkpoint_dir, models, config, hooks.vocab_fingerprint);
  }
  return result;
}

}  // namespace cycletrans
