#include <benchmark/benchmark.h>

#include "nplab/spectral/extremal_sv.hpp"

using namespace nplab;

namespace {

void BM_ExactExtremalSv(benchmark::State& state) {
  Rng rng(1);
  const Matrix w = rng.normal_matrix(state.range(0), state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(spectral::exact_extremal_sv(w));
}
BENCHMARK(BM_ExactExtremalSv)->Arg(64)->Arg(128)->Arg(256);

void BM_LobpcgExtremalSv(benchmark::State& state) {
  Rng rng(1);
  const Matrix w = rng.normal_matrix(state.range(0), state.range(0));
  const int iterations = static_cast<int>(state.range(1));
  for (auto _ : state) {
    Rng solver(2);
    benchmark::DoNotOptimize(spectral::lobpcg_extremal_sv(w, iterations, solver));
  }
}
BENCHMARK(BM_LobpcgExtremalSv)->Args({64, 10})->Args({128, 10})->Args({256, 10})->Args({64, 30});

}  // namespace
