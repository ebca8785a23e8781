#pragma once

#include <Eigen/Dense>

namespace nplab {

/// Dense row-major real matrix. Rows index points, columns index features.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

/// Views a vector as a 1 x n row.
inline Matrix as_row(const Vector& v) { return v.transpose(); }

}  // namespace nplab
