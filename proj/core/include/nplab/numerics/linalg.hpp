#pragma once

#include "nplab/numerics/matrix.hpp"

namespace nplab {

/// Diagonal jitter tried, in order, when a Cholesky factorization fails.
inline constexpr double kJitterLadder[] = {1e-10, 1e-8, 1e-6};

/// Lower-triangular L with L L^T = A (+ jitter on failure).
/// Throws DecompositionError when A is not positive definite after 1e-6 jitter.
Matrix cholesky(const Matrix& a);

/// Solves A x = b given the Cholesky factor of A.
Matrix cholesky_solve(const Matrix& lower, const Matrix& b);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& symmetric);

}  // namespace nplab
