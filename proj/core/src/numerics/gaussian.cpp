#include "nplab/numerics/gaussian.hpp"

#include <cmath>
#include <numbers>

#include "nplab/errors.hpp"

namespace nplab {

void DiagGaussian::validate() const {
  if (mean.size() != log_var.size()) throw DimensionError("DiagGaussian: mean and log_var lengths differ");
  if (!mean.allFinite() || !log_var.allFinite()) throw NumericError("DiagGaussian: non-finite parameters");
}

double gaussian_log_prob(const Vector& y, const DiagGaussian& q) {
  if (y.size() != q.mean.size() || q.log_var.size() != q.mean.size())
    throw DimensionError("gaussian_log_prob: dimension mismatch");
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  double total = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    const double d = y[i] - q.mean[i];
    total += -half_log_2pi - 0.5 * q.log_var[i] - 0.5 * d * d * std::exp(-q.log_var[i]);
  }
  return total;
}

double kl_diag(const DiagGaussian& q, const DiagGaussian& p) {
  if (q.dim() != p.dim() || q.log_var.size() != q.dim() || p.log_var.size() != p.dim())
    throw DimensionError("kl_diag: dimension mismatch");
  double total = 0.0;
  for (Index i = 0; i < q.dim(); ++i) {
    const double d = q.mean[i] - p.mean[i];
    total += 0.5 * (std::exp(q.log_var[i] - p.log_var[i]) + d * d * std::exp(-p.log_var[i]) - 1.0 +
                    p.log_var[i] - q.log_var[i]);
  }
  return total;
}

Vector reparam_sample(const DiagGaussian& q, const Vector& noise) {
  if (noise.size() != q.dim()) throw DimensionError("reparam_sample: noise dimension mismatch");
  return q.mean + (0.5 * q.log_var.array()).exp().matrix().cwiseProduct(noise);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace nplab
