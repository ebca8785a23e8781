#include "nplab/training/adam.hpp"

#include <cmath>

#include "nplab/errors.hpp"

namespace nplab::training {
void AdamConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr: must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("adam betas: must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("adam eps: must be > 0");
}

AdamState make_adam_state(std::span<const MlpParams* const> params) {
  AdamState s;
  for (const MlpParams* p : params) {
    s.m.push_back(zeros_like(*p));
    s.v.push_back(zeros_like(*p));
  }
  return s;
}

double global_norm(std::span<const MlpParams> grads) {
  double sq = 0.0;
  for (const MlpParams& g : grads)
    for (const Layer& l : g.layers) sq += l.weight.squaredNorm() + l.bias.squaredNorm();
  return std::sqrt(sq);
}

StepReport adam_step(AdamState& state, std::span<MlpParams* const> params, std::span<const MlpParams> grads,
                     const AdamConfig& cfg) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw DimensionError("adam_step: parameter, gradient and state counts differ");
  StepReport r;
  r.grad_norm = global_norm(grads);
  if (!std::isfinite(r.grad_norm)) return r;
  double scale = 1.0;
  if (cfg.clip_norm > 0.0 && r.grad_norm > cfg.clip_norm) {
    scale = cfg.clip_norm / r.grad_norm;
    r.clipped = true;
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  // Folding the bias corrections into the step size and epsilon keeps the
  // update identical to the textbook form m_hat / (sqrt(v_hat) + eps).
  const double lr_t = cfg.lr * std::sqrt(bc2) / bc1;
  const double eps_hat = cfg.eps * std::sqrt(bc2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    MlpParams& p = *params[i];
    if (p.layers.size() != grads[i].layers.size()) throw DimensionError("adam_step: layer counts differ");
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      Layer& w = p.layers[l];
      const Layer& g = grads[i].layers[l];
      Layer& m = state.m[i].layers[l];
      Layer& v = state.v[i].layers[l];
      if (g.weight.rows() != w.weight.rows() || g.weight.cols() != w.weight.cols() || g.bias.size() != w.bias.size())
        throw DimensionError("adam_step: gradient shape differs from parameter shape");
      m.weight = cfg.beta1 * m.weight + (1.0 - cfg.beta1) * scale * g.weight;
      v.weight = cfg.beta2 * v.weight + (1.0 - cfg.beta2) * (scale * g.weight).cwiseAbs2();
      w.weight.array() -= lr_t * m.weight.array() / (v.weight.array().sqrt() + eps_hat);
      m.bias = cfg.beta1 * m.bias + (1.0 - cfg.beta1) * scale * g.bias;
      v.bias = cfg.beta2 * v.bias + (1.0 - cfg.beta2) * (scale * g.bias).cwiseAbs2();
      w.bias.array() -= lr_t * m.bias.array() / (v.bias.array().sqrt() + eps_hat);
    }
  }
  r.applied = true;
  return r;
}

}  // namespace nplab::training
