#include <benchmark/benchmark.h>

#include "nplab/models/model.hpp"
#include "nplab/taskgen/tasks.hpp"

using namespace nplab;

namespace {

models::Model default_model(models::ModelKind kind) {
  models::ModelConfig cfg;
  cfg.kind = kind;
  Rng rng(1);
  return models::Model::initialize(cfg, rng);
}

// Prediction at N = 500 grid points against M context points.
void BM_DnpPredictContextScaling(benchmark::State& state) {
  const models::Model m = default_model(models::ModelKind::dnp);
  Rng data(2);
  std::vector<Vector> xc, yc, xs;
  for (int i = 0; i < state.range(0); ++i) {
    xc.push_back(Vector::Constant(1, data.uniform(-2.0, 2.0)));
    yc.push_back(Vector::Constant(1, data.normal()));
  }
  for (int i = 0; i < 500; ++i) xs.push_back(Vector::Constant(1, -4.0 + 8.0 * i / 499.0));
  for (auto _ : state) {
    Rng rng(3);
    benchmark::DoNotOptimize(models::predict(m, xc, yc, xs, 16, rng));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DnpPredictContextScaling)->RangeMultiplier(2)->Range(25, 400)->Complexity();

// One batch objective with gradients at the default training shape.
void BM_TrainingStep(benchmark::State& state) {
  const auto kind = static_cast<models::ModelKind>(state.range(0));
  const models::Model m = default_model(kind);
  taskgen::TaskGenConfig cfg;
  Rng data(4);
  const auto tasks = taskgen::make_task_batch(cfg, 50, data);
  models::LossOptions opts;
  for (auto _ : state) {
    Rng noise(5), solver(6);
    benchmark::DoNotOptimize(models::loss_and_gradients(m, tasks, opts, noise, solver));
  }
  state.SetLabel(models::to_string(kind));
}
BENCHMARK(BM_TrainingStep)
    ->Arg(static_cast<int>(models::ModelKind::cnp))
    ->Arg(static_cast<int>(models::ModelKind::np))
    ->Arg(static_cast<int>(models::ModelKind::dnp))
    ->Unit(benchmark::kMillisecond);

}  // namespace
