#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nplab/numerics/mlp.hpp"

namespace nplab::training {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 10.0;  // global gradient norm cap; <= 0 disables

  void validate() const;
};

/// First and second moment buffers shaped like the parameters.
struct AdamState {
  std::vector<MlpParams> m;
  std::vector<MlpParams> v;
  std::int64_t step = 0;
};

AdamState make_adam_state(std::span<const MlpParams* const> params);

struct StepReport {
  bool applied = false;  // false when the gradient held NaN or inf
  bool clipped = false;
  double grad_norm = 0.0;  // before clipping
};

/// Bias-corrected Adam update of every layer. A non-finite gradient leaves
/// parameters and state untouched.
StepReport adam_step(AdamState& state, std::span<MlpParams* const> params, std::span<const MlpParams> grads,
                     const AdamConfig& cfg);

double global_norm(std::span<const MlpParams> grads);

}  // namespace nplab::training
