#include "nplab/numerics/linalg.hpp"

#include "nplab/errors.hpp"

namespace nplab {
namespace {

bool try_llt(const Matrix& a, Matrix& lower) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) return false;
  lower = llt.matrixL();
  return lower.allFinite();
}

}  // namespace

Matrix cholesky(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("cholesky: matrix is not square");
  if (!a.allFinite()) throw NumericError("cholesky: non-finite entries");
  Matrix lower;
  if (try_llt(a, lower)) return lower;
  for (double jitter : kJitterLadder) {
    Matrix shifted = a;
    shifted.diagonal().array() += jitter;
    if (try_llt(shifted, lower)) return lower;
  }
  throw DecompositionError("cholesky: matrix not positive definite after jitter 1e-6");
}

Matrix cholesky_solve(const Matrix& lower, const Matrix& b) {
  Matrix x = lower.triangularView<Eigen::Lower>().solve(b);
  lower.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

double min_eigenvalue(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace nplab
