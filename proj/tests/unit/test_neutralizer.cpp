#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "cycletrans/error.hpp"
#include "cycletrans/neutralizer.hpp"
#include "grad_check.hpp"
#include "synthetic_fixture.hpp"

using namespace cycletrans;

namespace {

Mask mask_from_bits(unsigned bits, std::size_t n) {
  Mask m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = (bits >> i) & 1U;
  return m;
}

}  // namespace

TEST_CASE("mask log-probability") {
  const std::vector<double> p{0.9, 0.2, 0.6};
  CHECK(mask_log_prob(p, Mask{1, 0, 1}) == doctest::Approx(std::log(0.9 * 0.8 * 0.6)));
  CHECK(mask_log_prob(p, Mask{0, 1, 0}) == doctest::Approx(std::log(0.1 * 0.2 * 0.4)));
}

TEST_CASE("mask probabilities over all 2^T masks sum to one") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(10);
    std::vector<double> p(n);
    for (auto& v : p) v = rng.uniform(0.01, 0.99);
    double total = 0.0;
    for (unsigned bits = 0; bits < (1U << n); ++bits) total += std::exp(mask_log_prob(p, mask_from_bits(bits, n)));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("greedy mask thresholds at one half with an argmax fallback") {
  auto g = greedy_mask(std::vector<double>{0.7, 0.3, 0.5});
  CHECK(g.mask == Mask{1, 0, 1});
  CHECK(g.log_prob == doctest::Approx(std::log(0.7 * 0.7 * 0.5)));
  g = greedy_mask(std::vector<double>{0.1, 0.4, 0.2});
  CHECK(g.mask == Mask{0, 1, 0});
  CHECK(greedy_mask(std::vector<double>{0.9, 0.2, 0.8}).mask == Mask{1, 0, 1});
  CHECK(greedy_mask(std::vector<double>{0.9, 0.9, 0.9}).mask == Mask{1, 1, 1});
  const auto flat = greedy_mask(std::vector<double>{0.1, 0.1, 0.1});
  CHECK(flat.mask == Mask{1, 0, 0});
  CHECK(flat.log_prob == doctest::Approx(std::log(0.1 * 0.9 * 0.9)));
}

TEST_CASE("sample_mask never returns an empty mask") {
  Rng rng(5);
  const std::vector<double> tiny{1e-6, 2e-6, 1e-6};
  for (int i = 0; i < 100; ++i) {
    const auto s = sample_mask(tiny, rng);
    CHECK(s.mask == Mask{0, 1, 0});
    CHECK(s.log_prob == doctest::Approx(mask_log_prob(tiny, s.mask)));
  }
  const std::vector<double> p{0.5, 0.5, 0.5, 0.5};
  for (int i = 0; i < 200; ++i) {
    const auto s = sample_mask(p, rng);
    int kept = 0;
    for (auto m : s.mask) kept += m;
    CHECK(kept >= 1);
  }
}

TEST_CASE("draw_mask frequencies follow the probabilities") {
  Rng rng(6);
  const std::vector<double> p{0.1, 0.5, 0.9, 0.3};
  std::vector<int> ones(p.size(), 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto m = draw_mask(p, rng);
    for (std::size_t k = 0; k < p.size(); ++k) ones[k] += m[k];
  }
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double sigma = std::sqrt(p[k] * (1 - p[k]) / n);
    CHECK(std::abs(static_cast<double>(ones[k]) / n - p[k]) < 3 * sigma);
  }
  const std::vector<double> sharp{1.0 - 1e-12, 1e-12};
  for (int i = 0; i < 100; ++i) CHECK(sample_mask(sharp, rng).mask == Mask{1, 0});
}

TEST_CASE("apply_mask") {
  const std::vector<TokenId> toks{10, 11, 12, 13};
  CHECK(apply_mask(toks, Mask{1, 0, 1, 1}) == std::vector<TokenId>{10, 12, 13});
  CHECK(apply_mask(toks, Mask{0, 0, 0, 0}).empty());
  CHECK(apply_mask(toks, Mask{1, 1, 1, 1}) == toks);
  CHECK_THROWS_AS(apply_mask(toks, Mask{1, 0}), ValidationError);
}

TEST_CASE("score function gradient matches finite differences") {
  ModelDims d{15, 5, 6, 8};
  d.init_scale = 0.5;
  Neutralizer model(d);
  const std::vector<TokenId> toks{4, 9, 5, 14, 6};
  const Mask mask{1, 0, 1, 1, 0};
  nn::GradSet g(model.params());
  const double lp = model.log_prob_gradient(toks, mask, g, 1.0);
  CHECK(lp == doctest::Approx(mask_log_prob(model.tag_probabilities(toks), mask)));
  auto loss = [&] { return mask_log_prob(model.tag_probabilities(toks), mask); };
  const auto r = testing::check_gradients(model.params(), g, loss);
  CHECK_MESSAGE(r.worst_relative_error < 1e-6, r.worst_tensor);
  CHECK_THROWS_AS(model.log_prob_gradient(toks, Mask{1}, g, 1.0), ValidationError);
}

TEST_CASE("tagger output range and empty input") {
  Neutralizer model(ModelDims{10, 4, 4, 2});
  const std::vector<TokenId> toks{4, 5, 6};
  const auto p = model.tag_probabilities(toks);
  CHECK(p.size() == 3);
  for (double v : p) CHECK((v > 0.0 && v < 1.0));
  CHECK_THROWS_AS(model.tag_probabilities(std::vector<TokenId>{}), PreconditionError);
  const auto before = model.params().at(0);
  nn::EpochOptions o;
  o.epochs = 0;
  CHECK(pretrain_neutralizer(model, AttnClassifier(ModelDims{10, 4, 4, 1}), {}, o).empty());
  CHECK(model.params().at(0) == before);
}

TEST_CASE("pre-training loss gradient matches finite differences") {
  ModelDims d{15, 5, 6, 10};
  d.init_scale = 0.5;
  Neutralizer model(d);
  const std::vector<TokenId> a{4, 9, 5};
  const std::vector<TokenId> b{14, 6, 7, 8};
  const Mask ma{1, 0, 1};
  const Mask mb{1, 1, 0, 1};
  nn::GradSet g(model.params());
  model.log_prob_gradient(a, ma, g, -0.5);
  model.log_prob_gradient(b, mb, g, -0.5);
  auto loss = [&] {
    return -0.5 * (mask_log_prob(model.tag_probabilities(a), ma) +
                   mask_log_prob(model.tag_probabilities(b), mb));
  };
  const auto r = testing::check_gradients(model.params(), g, loss);
  CHECK_MESSAGE(r.worst_relative_error < 1e-4, r.worst_tensor);
}

TEST_CASE("expected score is zero") {
  ModelDims d{12, 4, 5, 9};
  d.init_scale = 0.5;
  Neutralizer model(d);
  const std::vector<TokenId> toks{4, 5, 6, 7};
  const auto p = model.tag_probabilities(toks);
  nn::GradSet expected(model.params());
  for (unsigned bits = 0; bits < 16; ++bits) {
    const auto m = mask_from_bits(bits, 4);
    model.log_prob_gradient(toks, m, expected, std::exp(mask_log_prob(p, m)));
  }
  CHECK(expected.norm() < 1e-10);
}

TEST_CASE("pre-training follows the classifier's mask") {
  const auto& corpus = testing::synthetic_corpus();
  const auto& classifier = testing::synthetic_classifier();
  const auto config = TrainConfig::synthetic();
  Neutralizer model(testing::synthetic_dims(derive_seed(config.seed, 12)));
  const auto losses = pretrain_neutralizer(model, classifier, corpus.splits.train,
                                           pretrain_options(config, config.neutralizer_epochs, 2));
  CHECK(losses.size() == static_cast<std::size_t>(config.neutralizer_epochs));
  CHECK(losses.back() < losses.front());
  CHECK(tagging_agreement(model, classifier, corpus.splits.test) >= 0.9);
  CHECK(emotional_removal_rate(model, corpus.splits.test) >= 0.9);

  const auto path = std::filesystem::temp_directory_path() / "cycletrans_neutralizer.ckpt";
  model.save(path, 77);
  const auto back = Neutralizer::load(path);
  const auto& e = corpus.splits.test.front();
  CHECK(back.tag_probabilities(e.tokens) == model.tag_probabilities(e.tokens));
}
