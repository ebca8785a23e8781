#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nplab/numerics/matrix.hpp"
#include "nplab/random.hpp"

namespace nplab::taskgen {

enum class KernelFamily { rbf, matern52, periodic };

std::string to_string(KernelFamily f);
KernelFamily parse_kernel_family(std::string_view name);

/// Stationary covariance function; `outputscale` is the prior variance k(x, x).
struct KernelSpec {
  KernelFamily family = KernelFamily::rbf;
  double lengthscale = 1.0;
  double outputscale = 1.0;
  double period = 1.0;  // periodic only
  double noise = 0.0;   // observation noise standard deviation

  void validate() const;
};

double kernel_eval(const KernelSpec& k, const Vector& x1, const Vector& x2);

/// K_ij = k(a_i, b_j).
Matrix kernel_matrix(const KernelSpec& k, std::span<const Vector> a, std::span<const Vector> b);
Matrix kernel_matrix(const KernelSpec& k, std::span<const Vector> xs);

/// One draw from N(0, K + noise^2 I) at the given inputs.
std::vector<double> sample_gp_function(const KernelSpec& k, std::span<const Vector> xs, Rng& rng);

}  // namespace nplab::taskgen
