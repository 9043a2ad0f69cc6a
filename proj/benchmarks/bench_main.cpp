#include <benchmark/benchmark.h>

#include <vector>

#include "cycletrans/attn_classifier.hpp"
#include "cycletrans/bleu.hpp"
#include "cycletrans/cycle_trainer.hpp"
#include "cycletrans/nn/layers.hpp"
#include "cycletrans/random.hpp"
#include "cycletrans/synth.hpp"

using namespace cycletrans;

namespace {

std::vector<TokenId> random_tokens(Rng& rng, std::size_t n, int vocab) {
  std::vector<TokenId> out(n);
  for (auto& t : out) t = static_cast<TokenId>(rng.below(static_cast<std::uint64_t>(vocab)));
  return out;
}

void BM_SentenceBleu(benchmark::State& state) {
  Rng rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto c = random_tokens(rng, n, 30);
  const auto r = random_tokens(rng, n, 30);
  for (auto _ : state) benchmark::DoNotOptimize(sentence_bleu(c, r));
}
BENCHMARK(BM_SentenceBleu)->Arg(10)->Arg(20)->Arg(80);

void BM_LstmForward(benchmark::State& state) {
  const int hidden = static_cast<int>(state.range(0));
  nn::ParamSet params;
  const auto lstm = nn::LstmLayer::create(params, "lstm", hidden, hidden);
  Rng rng(2);
  params.init_uniform(0.1, rng);
  std::vector<nn::Vector> inputs(20, nn::Vector::Constant(hidden, 0.1));
  for (auto _ : state) benchmark::DoNotOptimize(lstm.run(params, inputs));
}
BENCHMARK(BM_LstmForward)->Arg(32)->Arg(128)->Arg(500);

void BM_ClassifierInference(benchmark::State& state) {
  ModelDims dims{200, 32, 32, 3};
  AttnClassifier model(dims);
  Rng rng(3);
  const auto x = random_tokens(rng, 12, 200);
  for (auto _ : state) benchmark::DoNotOptimize(model.classify(x));
}
BENCHMARK(BM_ClassifierInference);

void BM_CycleIteration(benchmark::State& state) {
  const auto spec = default_template_spec();
  const auto corpus = synth_corpus(spec, spec.seed);
  auto config = TrainConfig::synthetic();
  auto models = ModelBundle::create(config, static_cast<int>(corpus.vocab.size()));
  train_classifier(models.classifier, corpus.splits.train, pretrain_options(config, 1, 1));
  CycleTrainer trainer(models, config);
  std::vector<const Example*> batch;
  for (std::size_t i = 0; i < static_cast<std::size_t>(config.batch_size); ++i) {
    batch.push_back(&corpus.splits.train[i]);
  }
  int it = 0;
  for (auto _ : state) benchmark::DoNotOptimize(trainer.iteration(batch, it++));
}
BENCHMARK(BM_CycleIteration)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
