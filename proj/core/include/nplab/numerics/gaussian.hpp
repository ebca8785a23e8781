#pragma once

#include "nplab/numerics/matrix.hpp"

namespace nplab {

/// Factorized Gaussian parameterized by mean and log-variance.
struct DiagGaussian {
  Vector mean;
  Vector log_var;

  Index dim() const { return mean.size(); }
  Vector variance() const { return log_var.array().exp().matrix(); }
  void validate() const;
};

/// Heads emit log-variance clamped to this range.
inline constexpr double kMinLogVar = -10.0;
inline constexpr double kMaxLogVar = 10.0;

double gaussian_log_prob(const Vector& y, const DiagGaussian& q);
double kl_diag(const DiagGaussian& q, const DiagGaussian& p);
Vector reparam_sample(const DiagGaussian& q, const Vector& noise);

/// Standard normal CDF.
double normal_cdf(double z);

}  // namespace nplab
