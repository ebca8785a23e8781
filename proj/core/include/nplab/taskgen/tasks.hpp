#pragma once

#include <cstdint>
#include <vector>

#include "nplab/numerics/gaussian.hpp"
#include "nplab/taskgen/kernel.hpp"

namespace nplab::taskgen {

/// One meta-learning regression instance. The target set contains every point,
/// including the context points.
struct Task {
  std::vector<Vector> x_context;
  std::vector<Vector> y_context;
  std::vector<Vector> x_target;
  std::vector<Vector> y_target;
  KernelSpec kernel;

  std::size_t context_size() const { return x_context.size(); }
  std::size_t target_size() const { return x_target.size(); }
  Index x_dim() const { return x_target.empty() ? 0 : x_target.front().size(); }
  Index y_dim() const { return y_target.empty() ? 0 : y_target.front().size(); }
  void validate() const;
};

/// Half-open interval [lo, hi).
struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Closed integer range {lo, ..., hi}.
struct IntRange {
  int lo = 0;
  int hi = 0;
};

struct TaskGenConfig {
  KernelFamily family = KernelFamily::rbf;
  int x_dim = 1;
  Interval x_range{-2.0, 2.0};
  IntRange n_context{3, 50};
  int n_target = 50;
  Interval lengthscale{0.6, 1.0};
  Interval outputscale{0.1, 1.0};
  Interval period{0.5, 1.5};
  double noise = 0.02;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Resamples kernel hyperparameters per task, draws n_target inputs uniformly,
/// samples one GP function with observation noise, and takes the first M
/// targets (M ~ U{n_context}) as the context.
std::vector<Task> make_task_batch(const TaskGenConfig& cfg, int batch, Rng& rng);

/// Perturbs outputs with N(0, (level * std(y_target))^2). Context points that
/// coincide with a target receive the same perturbed value.
Task add_observation_noise(const Task& task, double level, Rng& rng);

/// True when both vectors hold bitwise-identical values.
bool same_point(const Vector& a, const Vector& b);

}  // namespace nplab::taskgen
