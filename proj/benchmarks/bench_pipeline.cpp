#include <benchmark/benchmark.h>

#include "medsum/metrics.hpp"
#include "medsum/rng.hpp"
#include "medsum/text_pipeline.hpp"

using namespace medsum;

namespace {

std::string sample_paragraph() {
  std::string text;
  for (int i = 0; i < 40; ++i) {
    text +=
        "Patients with Type 2 diabetes received metformin therapy; fasting "
        "glucose (mg/dL) improved by 12% after twelve weeks. ";
  }
  return text;
}

std::vector<std::string> random_tokens(int len, std::uint64_t seed) {
  static const std::vector<std::string> pool = {"a", "b", "c", "d", "e"};
  Lcg64 rng(seed);
  std::vector<std::string> toks;
  toks.reserve(static_cast<std::size_t>(len));
  for (int i = 0; i < len; ++i) toks.push_back(pool[rng.below(pool.size())]);
  return toks;
}

}  // namespace

static void BM_CleanTokenize(benchmark::State& state) {
  const std::string text = sample_paragraph();
  for (auto _ : state) {
    benchmark::DoNotOptimize(tokenize(clean_text(text)));
  }
}
BENCHMARK(BM_CleanTokenize);

static void BM_RougeN(benchmark::State& state) {
  const auto cand = random_tokens(static_cast<int>(state.range(0)), 3);
  const auto ref = random_tokens(static_cast<int>(state.range(0)), 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rouge_n(cand, ref, 2));
  }
}
BENCHMARK(BM_RougeN)->Arg(16)->Arg(128);

static void BM_RougeL(benchmark::State& state) {
  const auto cand = random_tokens(static_cast<int>(state.range(0)), 5);
  const auto ref = random_tokens(static_cast<int>(state.range(0)), 6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rouge_l(cand, ref));
  }
}
BENCHMARK(BM_RougeL)->Arg(16)->Arg(128);
