#include <benchmark/benchmark.h>

#include "nplab/numerics/autodiff.hpp"
#include "nplab/numerics/mlp.hpp"
#include "nplab/random.hpp"

using namespace nplab;

namespace {

MlpParams net64(Rng& rng) {
  const int widths[] = {2, 64, 64, 64, 128};
  return make_mlp(widths, rng);
}

void BM_MlpForwardRows(benchmark::State& state) {
  Rng rng(1);
  const MlpParams net = net64(rng);
  const Matrix xs = rng.normal_matrix(state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(mlp_forward_rows(net, xs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpForwardRows)->Arg(50)->Arg(500)->Arg(2500);

void BM_MlpTapeForwardBackward(benchmark::State& state) {
  Rng rng(2);
  const MlpParams net = net64(rng);
  const Matrix xs = rng.normal_matrix(state.range(0), 2);
  for (auto _ : state) {
    ad::Tape tape;
    const BoundMlp b = bind(tape, net);
    const ad::Var root = ad::sum(forward(b, tape.constant(xs)));
    tape.backward(root);
    benchmark::DoNotOptimize(gradients(tape, b));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpTapeForwardBackward)->Arg(50)->Arg(500)->Arg(2500);

}  // namespace
