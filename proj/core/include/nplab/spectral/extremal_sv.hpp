#pragma once

#include "nplab/numerics/matrix.hpp"
#include "nplab/random.hpp"

namespace nplab::spectral {

enum class SolverPath {
  exact,           // full SVD
  lobpcg,          // iterative estimate
  direct,          // Gram matrix too small for the block; dense eigensolve
  exact_fallback,  // LOBPCG broke down; full SVD used instead
};

/// Extremal singular values of a matrix with their singular vectors.
/// W v = sigma u holds for both pairs.
struct SpectralBounds {
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  Vector u_min, u_max;  // left
  Vector v_min, v_max;  // right
  SolverPath path = SolverPath::exact;
};

SpectralBounds exact_extremal_sv(const Matrix& w);

struct LobpcgOptions {
  int block = 2;
  /// Preconditions the smallest-end solve with the inverse Gram matrix
  /// (one Cholesky factorization per call). Without it the smallest singular
  /// value of a dense square matrix converges far too slowly for T ~ 10.
  bool precondition_smallest = true;
};

/// LOBPCG on the smaller of W W^T and W^T W; returns square roots of the
/// extremal eigenvalue estimates after `iterations` steps.
SpectralBounds lobpcg_extremal_sv(const Matrix& w, int iterations, Rng& rng, const LobpcgOptions& options = {});

}  // namespace nplab::spectral
