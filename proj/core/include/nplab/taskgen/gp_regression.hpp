#pragma once

#include <span>
#include <vector>

#include "nplab/numerics/gaussian.hpp"
#include "nplab/taskgen/tasks.hpp"

namespace nplab::taskgen {

/// Exact GP predictive distribution for y at each query point, conditioned on
/// the task's context with observation noise k.noise. Output dimensions are
/// treated as independent GPs sharing the kernel. Variances include noise^2.
std::vector<DiagGaussian> gp_posterior_predict(const KernelSpec& k, const Task& task,
                                               std::span<const Vector> x_star);

}  // namespace nplab::taskgen
