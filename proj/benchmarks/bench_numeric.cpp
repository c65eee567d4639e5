#include <benchmark/benchmark.h>

#include "medsum/rng.hpp"
#include "medsum/tape.hpp"

using namespace medsum;

namespace {

TensorRef random_tensor(std::vector<int> shape, std::uint64_t seed) {
  Lcg64 rng(seed);
  TensorRef t = make_tensor(std::move(shape));
  for (auto& v : t->values) v = rng.uniform(-1.0, 1.0);
  return t;
}

}  // namespace

static void BM_AffineForward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto w = random_tensor({n, n}, 1);
  auto x = random_tensor({n}, 2);
  auto b = random_tensor({n}, 3);
  for (auto _ : state) {
    Tape tape;
    benchmark::DoNotOptimize(tape.affine(w, x, b));
  }
}
BENCHMARK(BM_AffineForward)->Arg(64)->Arg(256);

static void BM_AffineForwardBackward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto w = random_tensor({n, n}, 1);
  auto x = random_tensor({n}, 2);
  auto b = random_tensor({n}, 3);
  for (auto _ : state) {
    Tape tape;
    auto loss = tape.sum(tape.tanh_elem(tape.affine(w, x, b)));
    tape.backward(loss);
    benchmark::DoNotOptimize(loss->values[0]);
  }
}
BENCHMARK(BM_AffineForwardBackward)->Arg(64)->Arg(256);

static void BM_Softmax(benchmark::State& state) {
  auto x = random_tensor({static_cast<int>(state.range(0))}, 7);
  for (auto _ : state) {
    Tape tape;
    benchmark::DoNotOptimize(tape.softmax(x));
  }
}
BENCHMARK(BM_Softmax)->Arg(64)->Arg(1024);
