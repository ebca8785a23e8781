#include "nplab/spectral/extremal_sv.hpp"

#include <algorithm>
#include <cmath>

#include "nplab/errors.hpp"
#include "nplab/numerics/linalg.hpp"
#include "nplab/spectral/lobpcg.hpp"

namespace nplab::spectral {
namespace {

Vector unit(Index n, Index k = 0) {
  Vector e = Vector::Zero(n);
  if (n > 0) e[k % n] = 1.0;
  return e;
}

// Completes a singular pair from one side: the partner is W v / sigma (or
// W^T u / sigma), or an arbitrary unit vector when sigma vanishes.
Vector partner(const Matrix& w, const Vector& side, bool side_is_right, double sigma) {
  Vector other = side_is_right ? Vector(w * side) : Vector(w.transpose() * side);
  const double n = other.norm();
  if (sigma <= 0.0 || n <= 0.0) return unit(side_is_right ? w.rows() : w.cols());
  return other / n;
}

}  // namespace

SpectralBounds exact_extremal_sv(const Matrix& w) {
  if (w.size() == 0) throw DimensionError("exact_extremal_sv: empty matrix");
  Eigen::JacobiSVD<Matrix> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const Index last = s.size() - 1;
  SpectralBounds b;
  b.sigma_max = s[0];
  b.sigma_min = s[last];
  b.u_max = svd.matrixU().col(0);
  b.v_max = svd.matrixV().col(0);
  b.u_min = svd.matrixU().col(last);
  b.v_min = svd.matrixV().col(last);
  b.path = SolverPath::exact;
  return b;
}

SpectralBounds lobpcg_extremal_sv(const Matrix& w, int iterations, Rng& rng, const LobpcgOptions& options) {
  if (iterations < 1) throw ContractError("lobpcg_extremal_sv: iteration count must be >= 1");
  if (w.size() == 0) throw DimensionError("lobpcg_extremal_sv: empty matrix");

  // Work on W^T W (q x q) when q <= p, else on W W^T (p x p).
  const bool right_side = w.cols() <= w.rows();
  const Index n = right_side ? w.cols() : w.rows();
  const auto apply = [&w, right_side](const Matrix& x) -> Matrix {
    if (right_side) return w.transpose() * (w * x);
    return w * (w.transpose() * x);
  };

  const auto finish = [&](double lam_min, const Vector& vec_min, double lam_max, const Vector& vec_max,
                          SolverPath path) {
    SpectralBounds b;
    b.sigma_min = std::sqrt(std::max(lam_min, 0.0));
    b.sigma_max = std::sqrt(std::max(lam_max, 0.0));
    if (b.sigma_min > b.sigma_max) b.sigma_min = b.sigma_max;
    const Vector vmin = vec_min.normalized();
    const Vector vmax = vec_max.normalized();
    if (right_side) {
      b.v_min = vmin;
      b.v_max = vmax;
      b.u_min = partner(w, vmin, true, b.sigma_min);
      b.u_max = partner(w, vmax, true, b.sigma_max);
    } else {
      b.u_min = vmin;
      b.u_max = vmax;
      b.v_min = partner(w, vmin, false, b.sigma_min);
      b.v_max = partner(w, vmax, false, b.sigma_max);
    }
    b.path = path;
    return b;
  };

  if (3 * static_cast<Index>(options.block) > n) {
    const Matrix gram = apply(Matrix::Identity(n, n));
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (gram + gram.transpose()));
    return finish(es.eigenvalues()[0], es.eigenvectors().col(0), es.eigenvalues()[n - 1],
                  es.eigenvectors().col(n - 1), SolverPath::direct);
  }

  EigenEstimate top = lobpcg(apply, n, options.block, iterations, true, {}, rng);

  BlockOperator precond;
  Matrix chol;
  if (options.precondition_smallest) {
    try {
      chol = cholesky(apply(Matrix::Identity(n, n)));
      precond = [&chol](const Matrix& r) -> Matrix { return cholesky_solve(chol, r); };
    } catch (const DecompositionError&) {
      // Singular Gram matrix: the unpreconditioned iteration still applies.
    }
  }
  EigenEstimate bottom = lobpcg(apply, n, options.block, iterations, false, precond, rng);

  if (top.breakdown || bottom.breakdown) {
    SpectralBounds b = exact_extremal_sv(w);
    b.path = SolverPath::exact_fallback;
    return b;
  }
  return finish(bottom.values[0], bottom.vectors.col(0), top.values[0], top.vectors.col(0), SolverPath::lobpcg);
}

}  // namespace nplab::spectral
