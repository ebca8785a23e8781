#include "nplab/taskgen/tasks.hpp"

#include <cmath>
#include <cstring>

#include "nplab/errors.hpp"

namespace nplab::taskgen {

bool same_point(const Vector& a, const Vector& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(double)) == 0;
}

void Task::validate() const {
  if (x_context.size() != y_context.size()) throw ContractError("task: context x/y counts differ");
  if (x_target.size() != y_target.size()) throw ContractError("task: target x/y counts differ");
  if (x_target.empty()) throw ContractError("task: target set is empty");
  const Index dx = x_dim(), dy = y_dim();
  for (std::size_t i = 0; i < x_target.size(); ++i)
    if (x_target[i].size() != dx || y_target[i].size() != dy) throw DimensionError("task: ragged target points");
  for (std::size_t i = 0; i < x_context.size(); ++i)
    if (x_context[i].size() != dx || y_context[i].size() != dy) throw DimensionError("task: ragged context points");
}

void TaskGenConfig::validate() const {
  std::string errors;
  const auto check = [&errors](bool ok, const char* msg) {
    if (!ok) errors += std::string(errors.empty() ? "" : "; ") + msg;
  };
  check(x_dim >= 1, "data.x_dim: must be >= 1");
  check(x_range.lo < x_range.hi, "data.x_range: empty interval");
  check(n_target >= 1, "data.n_target: must be >= 1");
  check(n_context.lo >= 1 && n_context.lo <= n_context.hi, "data.n_context: need 1 <= lo <= hi");
  check(n_context.hi <= n_target, "data.n_context: hi must not exceed n_target");
  check(lengthscale.lo > 0.0 && lengthscale.lo < lengthscale.hi, "data.lengthscale: need 0 < lo < hi");
  check(outputscale.lo > 0.0 && outputscale.lo < outputscale.hi, "data.outputscale: need 0 < lo < hi");
  check(period.lo > 0.0 && period.lo < period.hi, "data.period: need 0 < lo < hi");
  check(noise >= 0.0, "data.noise: must be >= 0");
  if (!errors.empty()) throw ConfigError(errors);
}

std::vector<Task> make_task_batch(const TaskGenConfig& cfg, int batch, Rng& rng) {
  cfg.validate();
  if (batch < 0) throw ContractError("make_task_batch: negative batch size");
  std::vector<Task> tasks;
  tasks.reserve(static_cast<std::size_t>(batch));
  for (int b = 0; b < batch; ++b) {
    Task t;
    t.kernel.family = cfg.family;
    t.kernel.lengthscale = rng.uniform(cfg.lengthscale.lo, cfg.lengthscale.hi);
    t.kernel.outputscale = rng.uniform(cfg.outputscale.lo, cfg.outputscale.hi);
    t.kernel.period = cfg.family == KernelFamily::periodic ? rng.uniform(cfg.period.lo, cfg.period.hi) : 1.0;
    t.kernel.noise = cfg.noise;
    const int m = static_cast<int>(rng.uniform_int(cfg.n_context.lo, cfg.n_context.hi));

    t.x_target.reserve(static_cast<std::size_t>(cfg.n_target));
    for (int i = 0; i < cfg.n_target; ++i) {
      Vector x(cfg.x_dim);
      for (int d = 0; d < cfg.x_dim; ++d) x[d] = rng.uniform(cfg.x_range.lo, cfg.x_range.hi);
      t.x_target.push_back(std::move(x));
    }
    const std::vector<double> ys = sample_gp_function(t.kernel, t.x_target, rng);
    for (double y : ys) t.y_target.push_back(Vector::Constant(1, y));
    t.x_context.assign(t.x_target.begin(), t.x_target.begin() + m);
    t.y_context.assign(t.y_target.begin(), t.y_target.begin() + m);
    tasks.push_back(std::move(t));
  }
  return tasks;
}

Task add_observation_noise(const Task& task, double level, Rng& rng) {
  if (!(level >= 0.0 && level < 1.0)) throw ContractError("add_observation_noise: level must lie in [0, 1)");
  task.validate();
  if (level == 0.0) return task;
  const Index dy = task.y_dim();
  const double n = static_cast<double>(task.y_target.size());
  Vector mean = Vector::Zero(dy);
  for (const Vector& y : task.y_target) mean += y;
  mean /= n;
  Vector var = Vector::Zero(dy);
  for (const Vector& y : task.y_target) var += (y - mean).cwiseAbs2();
  const Vector sd = (var / n).cwiseSqrt();

  Task out = task;
  for (Vector& y : out.y_target)
    for (Index d = 0; d < dy; ++d) y[d] += level * sd[d] * rng.normal();
  for (std::size_t c = 0; c < out.x_context.size(); ++c) {
    bool matched = false;
    for (std::size_t t = 0; t < task.x_target.size() && !matched; ++t) {
      if (same_point(task.x_context[c], task.x_target[t]) && same_point(task.y_context[c], task.y_target[t])) {
        out.y_context[c] = out.y_target[t];
        matched = true;
      }
    }
    if (!matched)
      for (Index d = 0; d < dy; ++d) out.y_context[c][d] += level * sd[d] * rng.normal();
  }
  return out;
}

}  // namespace nplab::taskgen
