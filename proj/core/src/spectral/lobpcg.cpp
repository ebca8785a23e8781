#include "nplab/spectral/lobpcg.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "nplab/errors.hpp"

namespace nplab::spectral {
namespace {

// Removes the span of `basis` (orthonormal columns) from `y`, twice.
void project_out(const Matrix& basis, Matrix& y) {
  if (basis.cols() == 0 || y.cols() == 0) return;
  for (int pass = 0; pass < 2; ++pass) y -= basis * (basis.transpose() * y);
}

// Orthonormalizes the columns of `y`, dropping numerically dependent ones.
// Columns are normalized first so the drop threshold is relative to the
// column's magnitude before any projection the caller applied.
Matrix orthonormalize(Matrix y, double drop_tol) {
  if (y.cols() == 0) return y;
  for (int pass = 0; pass < 2; ++pass) {
    const Matrix gram = y.transpose() * y;
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    const Vector& d = es.eigenvalues();
    std::vector<Index> keep;
    for (Index i = 0; i < d.size(); ++i)
      if (d[i] > drop_tol) keep.push_back(i);
    Matrix z(y.rows(), static_cast<Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j)
      z.col(static_cast<Index>(j)) = y * es.eigenvectors().col(keep[j]) / std::sqrt(d[keep[j]]);
    y = std::move(z);
    if (y.cols() == 0) break;
  }
  return y;
}

Matrix normalize_columns(Matrix y) {
  for (Index j = 0; j < y.cols(); ++j) {
    const double n = y.col(j).norm();
    if (n > 0.0) y.col(j) /= n;
  }
  return y;
}

// Rayleigh-Ritz on an orthonormal basis; returns coefficients of the `block`
// most extremal Ritz vectors and their values.
void rayleigh_ritz(const Matrix& basis, const Matrix& op_basis, int block, bool largest, Matrix& coeffs,
                   Vector& values) {
  Matrix h = basis.transpose() * op_basis;
  h = 0.5 * (h + h.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const Index m = h.rows();
  const Index b = std::min<Index>(block, m);
  coeffs.resize(m, b);
  values.resize(b);
  for (Index j = 0; j < b; ++j) {
    const Index src = largest ? m - 1 - j : j;
    coeffs.col(j) = es.eigenvectors().col(src);
    values[j] = es.eigenvalues()[src];
  }
}

}  // namespace

EigenEstimate lobpcg(const BlockOperator& op, Index n, int block, int iterations, bool largest,
                     const BlockOperator& preconditioner, Rng& rng) {
  if (block < 1 || iterations < 0) throw ContractError("lobpcg: block and iteration count must be positive");
  if (3 * static_cast<Index>(block) > n) throw ContractError("lobpcg: operator too small for the block size");

  EigenEstimate out;
  Matrix x = orthonormalize(rng.normal_matrix(n, block), 1e-20);
  if (x.cols() < block) {
    out.breakdown = true;
    return out;
  }
  Matrix ax = op(x);
  Matrix coeffs;
  Vector theta;
  rayleigh_ritz(x, ax, block, largest, coeffs, theta);
  x = x * coeffs;
  ax = ax * coeffs;

  Matrix p(n, 0);
  for (int it = 0; it < iterations; ++it) {
    Matrix r = ax - x * theta.asDiagonal();
    const double scale = std::max(theta.cwiseAbs().maxCoeff(), 1e-300);
    if (r.colwise().norm().maxCoeff() <= 1e-14 * scale) break;
    Matrix w = preconditioner ? preconditioner(r) : r;
    w = normalize_columns(std::move(w));
    project_out(x, w);
    w = orthonormalize(std::move(w), 1e-20);

    Matrix pp = normalize_columns(p);
    project_out(x, pp);
    project_out(w, pp);
    pp = orthonormalize(std::move(pp), 1e-20);

    const Index m = x.cols() + w.cols() + pp.cols();
    Matrix s(n, m);
    s << x, w, pp;
    Matrix as(n, m);
    as.leftCols(x.cols()) = ax;
    if (w.cols() > 0) as.middleCols(x.cols(), w.cols()) = op(w);
    if (pp.cols() > 0) as.rightCols(pp.cols()) = op(pp);

    rayleigh_ritz(s, as, block, largest, coeffs, theta);
    if (!coeffs.allFinite() || !theta.allFinite()) {
      out.breakdown = true;
      return out;
    }
    const Index tail = m - x.cols();
    p = s.rightCols(tail) * coeffs.bottomRows(tail);
    x = s * coeffs;
    ax = as * coeffs;
    out.iterations = it + 1;
  }
  out.values = theta;
  out.vectors = x;
  out.breakdown = !x.allFinite() || !theta.allFinite();
  return out;
}

}  // namespace nplab::spectral
