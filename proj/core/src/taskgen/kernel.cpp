#include "nplab/taskgen/kernel.hpp"

#include <cmath>
#include <numbers>

#include "nplab/errors.hpp"
#include "nplab/numerics/linalg.hpp"

namespace nplab::taskgen {

std::string to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::rbf: return "rbf";
    case KernelFamily::matern52: return "matern52";
    case KernelFamily::periodic: return "periodic";
  }
  return "rbf";
}

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "rbf") return KernelFamily::rbf;
  if (name == "matern52" || name == "matern") return KernelFamily::matern52;
  if (name == "periodic") return KernelFamily::periodic;
  throw ConfigError("unknown kernel family '" + std::string(name) + "' (expected rbf, matern52, periodic)");
}

void KernelSpec::validate() const {
  if (!(lengthscale > 0.0)) throw ConfigError("kernel.lengthscale: must be > 0");
  if (!(outputscale > 0.0)) throw ConfigError("kernel.outputscale: must be > 0");
  if (family == KernelFamily::periodic && !(period > 0.0)) throw ConfigError("kernel.period: must be > 0");
  if (!(noise >= 0.0)) throw ConfigError("kernel.noise: must be >= 0");
}

double kernel_eval(const KernelSpec& k, const Vector& x1, const Vector& x2) {
  if (x1.size() != x2.size()) throw DimensionError("kernel_eval: input dimensions differ");
  const double r = (x1 - x2).norm();
  const double l = k.lengthscale;
  switch (k.family) {
    case KernelFamily::rbf:
      return k.outputscale * std::exp(-r * r / (2.0 * l * l));
    case KernelFamily::matern52: {
      const double s = std::sqrt(5.0) * r / l;
      return k.outputscale * (1.0 + s + 5.0 * r * r / (3.0 * l * l)) * std::exp(-s);
    }
    case KernelFamily::periodic: {
      const double sn = std::sin(std::numbers::pi * r / k.period);
      return k.outputscale * std::exp(-2.0 * sn * sn / (l * l));
    }
  }
  return 0.0;
}

Matrix kernel_matrix(const KernelSpec& k, std::span<const Vector> a, std::span<const Vector> b) {
  Matrix out(static_cast<Index>(a.size()), static_cast<Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out(static_cast<Index>(i), static_cast<Index>(j)) = kernel_eval(k, a[i], b[j]);
  return out;
}

Matrix kernel_matrix(const KernelSpec& k, std::span<const Vector> xs) {
  const Index n = static_cast<Index>(xs.size());
  Matrix out(n, n);
  for (Index i = 0; i < n; ++i) {
    out(i, i) = kernel_eval(k, xs[i], xs[i]);
    for (Index j = 0; j < i; ++j) out(i, j) = out(j, i) = kernel_eval(k, xs[i], xs[j]);
  }
  return out;
}

std::vector<double> sample_gp_function(const KernelSpec& k, std::span<const Vector> xs, Rng& rng) {
  Matrix cov = kernel_matrix(k, xs);
  cov.diagonal().array() += k.noise * k.noise;
  Matrix lower;
  try {
    lower = cholesky(cov);
  } catch (const DecompositionError& e) {
    throw GenerationError(std::string("sample_gp_function: ") + e.what());
  }
  const Vector z = rng.normal_vector(static_cast<Index>(xs.size()));
  const Vector f = lower.triangularView<Eigen::Lower>() * z;
  return {f.data(), f.data() + f.size()};
}

}  // namespace nplab::taskgen
