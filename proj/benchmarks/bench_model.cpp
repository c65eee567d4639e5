#include <benchmark/benchmark.h>

#include "medsum/model.hpp"
#include "medsum/training.hpp"

using namespace medsum;

namespace {

ModelConfig bench_config() {
  ModelConfig c;
  c.vocab_size = 120;
  c.embed_dim = 32;
  c.hidden_dim = 64;
  c.attention_dim = 32;
  c.encoder_layers = 2;
  c.max_source_len = 32;
  c.max_target_len = 12;
  c.seed = 77;
  return c;
}

TokenSequence bench_source() {
  return {5, 17, 9, 41, 22, 8, 30, 12, 66, 4};
}

}  // namespace

static void BM_Encode(benchmark::State& state) {
  const ModelConfig config = bench_config();
  const ModelParams params = init_params(config);
  const TokenSequence source = bench_source();
  for (auto _ : state) {
    Tape tape;
    benchmark::DoNotOptimize(encode(tape, source, params, config));
  }
}
BENCHMARK(BM_Encode);

static void BM_GreedyDecode(benchmark::State& state) {
  const ModelConfig config = bench_config();
  const ModelParams params = init_params(config);
  const TokenSequence source = bench_source();
  for (auto _ : state) {
    benchmark::DoNotOptimize(greedy_decode(source, params, config));
  }
}
BENCHMARK(BM_GreedyDecode);

static void BM_TrainStep(benchmark::State& state) {
  const ModelConfig config = bench_config();
  ModelParams params = init_params(config);
  std::vector<EncodedPair> batch;
  for (int i = 0; i < 4; ++i) {
    EncodedPair p;
    p.id = "b" + std::to_string(i);
    p.source = bench_source();
    p.target = {Vocabulary::kBos, 5, 17, 9, 41, Vocabulary::kEos};
    batch.push_back(std::move(p));
  }
  SgdMomentum opt(params);
  for (auto _ : state) {
    Tape tape;
    auto loss = compute_loss(tape, batch, params, config, 1.0);
    tape.backward(loss);
    opt.step(0.05, 0.9, 5.0);
    benchmark::DoNotOptimize(loss->values[0]);
  }
}
BENCHMARK(BM_TrainStep);
