#pragma once

#include <functional>

#include "nplab/numerics/matrix.hpp"
#include "nplab/random.hpp"

namespace nplab::spectral {

/// Applies a symmetric operator to every column of a block.
using BlockOperator = std::function<Matrix(const Matrix&)>;

struct EigenEstimate {
  Vector values;   // block entries, most extremal first
  Matrix vectors;  // n x block, orthonormal columns
  int iterations = 0;
  bool breakdown = false;
};

/// Locally optimal block preconditioned conjugate gradient for a few extremal
/// eigenpairs of a symmetric positive semi-definite operator of size n.
///
/// Each iteration applies the operator to 2 * block vectors and solves a
/// Rayleigh-Ritz problem of size at most 3 * block on the orthonormalized
/// basis [X, T R, P]. `preconditioner` may be empty.
EigenEstimate lobpcg(const BlockOperator& op, Index n, int block, int iterations, bool largest,
                     const BlockOperator& preconditioner, Rng& rng);

}  // namespace nplab::spectral
