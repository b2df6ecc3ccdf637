#include <benchmark/benchmark.h>

#include "permabound/bethe.hpp"
#include "permabound/entropy.hpp"
#include "permabound/exact.hpp"
#include "permabound/matrix.hpp"

namespace {

using namespace permabound;

void BM_Ryser(benchmark::State& state) {
  const NonNegMatrix m = generate(GeneratorKind::uniform, static_cast<int>(state.range(0)), 11);
  for (auto _ : state) benchmark::DoNotOptimize(permanent_ryser(m));
}
BENCHMARK(BM_Ryser)->DenseRange(8, 20, 4);

void BM_Naive(benchmark::State& state) {
  const NonNegMatrix m = generate(GeneratorKind::uniform, static_cast<int>(state.range(0)), 11);
  for (auto _ : state) benchmark::DoNotOptimize(permanent_naive(m));
}
BENCHMARK(BM_Naive)->DenseRange(4, 8, 2);

void BM_Sinkhorn(benchmark::State& state) {
  const NonNegMatrix m = generate(GeneratorKind::exponential, static_cast<int>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(sinkhorn_solve(m).value);
}
BENCHMARK(BM_Sinkhorn)->RangeMultiplier(2)->Range(4, 64);

void BM_DualH(benchmark::State& state) {
  const NonNegMatrix m = generate(GeneratorKind::exponential, static_cast<int>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(minimize_dual_h(m).value);
}
BENCHMARK(BM_DualH)->RangeMultiplier(2)->Range(4, 32);

void BM_BetheMirror(benchmark::State& state) {
  const NonNegMatrix m = generate(GeneratorKind::uniform, static_cast<int>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(solve_r_o_mirror(m).value);
}
BENCHMARK(BM_BetheMirror)->DenseRange(4, 12, 4);

void BM_BetheFrankWolfe(benchmark::State& state) {
  const NonNegMatrix m = generate(GeneratorKind::uniform, static_cast<int>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(solve_r_o_fw(m).value);
}
BENCHMARK(BM_BetheFrankWolfe)->DenseRange(4, 8, 4);

}  // namespace

BENCHMARK_MAIN();
