#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "cycletrans/emotionalizer.hpp"
#include "cycletrans/error.hpp"
#include "cycletrans/neutralizer.hpp"
#include "cycletrans/nn/ops.hpp"
#include "grad_check.hpp"
#include "synthetic_fixture.hpp"

using namespace cycletrans;

namespace {

ModelDims tiny_dims(std::uint64_t seed) {
  ModelDims d{20, 5, 6, seed};
  d.init_scale = 0.5;
  return d;
}

const Emotionalizer& pretrained() {
  static const Emotionalizer model = [] {
    const auto config = TrainConfig::synthetic();
    Emotionalizer m(testing::synthetic_dims(derive_seed(config.seed, 13)));
    pretrain_emotionalizer(m, testing::synthetic_classifier(), testing::synthetic_corpus().splits.train,
                           pretrain_options(config, config.emotionalizer_epochs, 3));
    return m;
  }();
  return model;
}

std::vector<TokenId> ground_truth_content(const Example& e) {
  Mask m(e.tokens.size(), 1);
  for (auto p : e.emotional_positions) m[p] = 0;
  return apply_mask(e.tokens, m);
}

}  // namespace

TEST_CASE("content encoding") {
  Emotionalizer model(tiny_dims(1));
  const std::vector<TokenId> a{4, 5, 6};
  const auto v = model.encode_content(a);
  CHECK(v.size() == 6);
  CHECK(v == model.encode_content(a));
  CHECK(model.encode_content(std::vector<TokenId>{9}).size() == 6);
  CHECK_THROWS_AS(model.encode_content(std::vector<TokenId>{}), PreconditionError);
}

TEST_CASE("decoding respects max_len and yields non-positive log-probs") {
  Emotionalizer model(tiny_dims(2));
  const std::vector<TokenId> kept{4, 5, 6};
  for (auto s : {Sentiment::kPositive, Sentiment::kNegative}) {
    CHECK(model.generate(kept, s, 1).tokens.size() <= 1);
    const auto g = model.generate(kept, s);
    CHECK(g.tokens.size() <= static_cast<std::size_t>(kDefaultMaxDecodeLength));
    CHECK(g.target == s);
    for (double lp : g.step_log_probs) CHECK(lp <= 0.0);
  }
}

TEST_CASE("reconstruction log-probability is non-positive") {
  Emotionalizer model(tiny_dims(3));
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<TokenId> x(1 + rng.below(6));
    for (auto& t : x) t = static_cast<TokenId>(4 + rng.below(16));
    std::vector<TokenId> kept{x.front()};
    CHECK(model.reconstruction_logprob(x, kept, Sentiment::kNegative) <= 0.0);
  }
}

TEST_CASE("reconstruction gradient matches finite differences") {
  Emotionalizer model(tiny_dims(4));
  const std::vector<TokenId> x{4, 9, 5, 14, 6};
  const std::vector<TokenId> kept{4, 5, 6};
  const std::vector<TokenId> x2{7, 8, 19};
  const std::vector<TokenId> kept2{8};
  nn::GradSet g(model.params());
  model.reconstruction_gradient(x, kept, Sentiment::kPositive, g, -1.0);
  model.reconstruction_gradient(x2, kept2, Sentiment::kNegative, g, -1.0);
  auto loss = [&] {
    return -model.reconstruction_logprob(x, kept, Sentiment::kPositive) -
           model.reconstruction_logprob(x2, kept2, Sentiment::kNegative);
  };
  const auto r = testing::check_gradients(model.params(), g, loss);
  CHECK_MESSAGE(r.worst_relative_error < 1e-4, r.worst_tensor);
}

TEST_CASE("decoder isolation") {
  for (auto s : {Sentiment::kPositive, Sentiment::kNegative}) {
    Emotionalizer model(tiny_dims(5));
    const auto before = model.params();
    const std::vector<TokenId> x{4, 5, 6, 7};
    const std::vector<TokenId> kept{4, 5};
    cycle_update(model, x, kept, s, 0.6);
    const auto own = model.decoder_param_indices(s);
    const auto other = model.decoder_param_indices(opposite(s));
    CHECK_FALSE(own.empty());
    for (auto i : other) CHECK(model.params().at(i) == before.at(i));
    bool own_changed = false;
    for (auto i : own) own_changed = own_changed || model.params().at(i) != before.at(i);
    CHECK(own_changed);
    std::set<std::size_t> shared(own.begin(), own.end());
    for (auto i : other) CHECK_FALSE(shared.contains(i));
  }
}

TEST_CASE("cycle_update with zero learning rate changes nothing") {
  Emotionalizer model(tiny_dims(6));
  const auto before = model.params();
  const std::vector<TokenId> x{4, 5, 6};
  cycle_update(model, x, std::vector<TokenId>{5}, Sentiment::kPositive, 0.0);
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(model.params().at(i) == before.at(i));
}

TEST_CASE("a small cycle_update step does not lower the likelihood") {
  Emotionalizer model(tiny_dims(7));
  const std::vector<TokenId> x{4, 9, 5, 14};
  const std::vector<TokenId> kept{4, 5};
  const double before = model.reconstruction_logprob(x, kept, Sentiment::kNegative);
  const double reported = cycle_update(model, x, kept, Sentiment::kNegative, 1e-3);
  CHECK(reported == doctest::Approx(before));
  CHECK(model.reconstruction_logprob(x, kept, Sentiment::kNegative) >= before);
}

TEST_CASE("overfitting one sentence drives the log-likelihood toward zero") {
  Emotionalizer model(tiny_dims(8));
  const std::vector<TokenId> x{4, 9, 5, 14, 6};
  const std::vector<TokenId> kept{4, 5, 6};
  const double start = model.reconstruction_logprob(x, kept, Sentiment::kPositive);
  for (int i = 0; i < 300; ++i) cycle_update(model, x, kept, Sentiment::kPositive, 0.3);
  const double end = model.reconstruction_logprob(x, kept, Sentiment::kPositive);
  CHECK(start < -5.0);
  CHECK(end <= 0.0);
  CHECK(end > -0.05);
  CHECK(model.generate(kept, Sentiment::kPositive).tokens == x);
}

TEST_CASE("teacher-forced likelihood equals the sum of decoded step masses") {
  const auto& model = pretrained();
  const auto& e = testing::synthetic_corpus().splits.test.front();
  const auto kept = ground_truth_content(e);
  const auto g = model.generate(kept, e.sentiment);
  double sum = 0.0;
  for (double lp : g.step_log_probs) sum += lp;
  CHECK(model.reconstruction_logprob(g.tokens, kept, e.sentiment) == doctest::Approx(sum));
}

TEST_CASE("pre-trained emotionalizer reconstructs and completes held-out sentences") {
  const auto& corpus = testing::synthetic_corpus();
  const auto& classifier = testing::synthetic_classifier();
  const auto& model = pretrained();
  const auto spec = default_template_spec();
  const std::set<std::string> positive(spec.positive_words.begin(), spec.positive_words.end());
  const std::set<std::string> negative(spec.negative_words.begin(), spec.negative_words.end());
  std::size_t exact = 0;
  std::size_t slot_exact = 0;
  std::size_t completed = 0;
  for (const auto& e : corpus.splits.test) {
    const auto kept = apply_mask(e.tokens, classifier.classify(e.tokens).attention.mask);
    const auto out = model.generate(kept, e.sentiment).tokens;
    exact += out == e.tokens;
    bool match = out.size() == e.tokens.size();
    for (std::size_t i = 0; match && i < out.size(); ++i) {
      const bool slot = std::find(e.emotional_positions.begin(), e.emotional_positions.end(), i) !=
                        e.emotional_positions.end();
      const auto& inventory = e.sentiment == Sentiment::kPositive ? positive : negative;
      match = slot ? inventory.contains(corpus.vocab.token(out[i])) : out[i] == e.tokens[i];
    }
    slot_exact += match;
    const auto completion = model.generate(ground_truth_content(e), Sentiment::kPositive).tokens;
    completed += std::any_of(completion.begin(), completion.end(), [&](TokenId t) {
      return positive.contains(corpus.vocab.token(t));
    });
  }
  const double n = static_cast<double>(corpus.splits.test.size());
  MESSAGE("token-exact " << exact / n << ", exact up to the emotional word " << slot_exact / n
                         << ", positive completion " << completed / n);
  CHECK(slot_exact / n >= 0.8);
  CHECK(completed / n >= 0.9);
}

TEST_CASE("zero epochs and checkpoint round trip") {
  Emotionalizer model(tiny_dims(9));
  const auto before = model.params().at(0);
  nn::EpochOptions o;
  o.epochs = 0;
  CHECK(pretrain_emotionalizer(model, testing::synthetic_classifier(), {}, o).empty());
  CHECK(model.params().at(0) == before);

  const auto path = std::filesystem::temp_directory_path() / "cycletrans_emotionalizer.ckpt";
  model.save(path, 5);
  std::uint64_t fp = 0;
  const auto back = Emotionalizer::load(path, &fp);
  CHECK(fp == 5);
  const std::vector<TokenId> x{4, 5, 6};
  CHECK(back.reconstruction_logprob(x, x, Sentiment::kPositive) ==
        model.reconstruction_logprob(x, x, Sentiment::kPositive));
}
