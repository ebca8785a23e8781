#pragma once

#include <vector>

#include "nplab/models/common.hpp"
#include "nplab/models/layout.hpp"

namespace nplab::models::detail {

/// Concatenation [x | y] of every row.
inline Matrix xy_rows(const BatchLayout& layout) {
  Matrix m(layout.x.rows(), layout.x.cols() + layout.y.cols());
  m << layout.x, layout.y;
  return m;
}

/// Task-level rows (one per task) expanded to one row per query.
inline ad::Var per_query(ad::Var task_rows, const BatchLayout& layout) {
  return ad::gather_rows(task_rows, layout.query_task);
}

inline std::vector<double> task_weights(const BatchLayout& layout) {
  return std::vector<double>(layout.task_count(), 1.0 / static_cast<double>(layout.task_count()));
}

inline Matrix sample_rows(const Matrix& mean, const Matrix& log_var, const Matrix& noise) {
  return mean + (0.5 * log_var.array()).exp().matrix().cwiseProduct(noise);
}

/// Splits decoder output rows ordered (target t, sample s) -> t * S + s.
inline PredictiveSet to_predictive(const Matrix& mean, const Matrix& log_var, std::size_t targets, Index samples) {
  PredictiveSet out;
  out.points.resize(targets);
  for (std::size_t t = 0; t < targets; ++t) {
    out.points[t].mean = mean.middleRows(static_cast<Index>(t) * samples, samples);
    out.points[t].log_var = log_var.middleRows(static_cast<Index>(t) * samples, samples);
  }
  return out;
}

/// Repeats every row of `m` `times` times consecutively.
inline Matrix repeat_rows(const Matrix& m, Index times) {
  Matrix out(m.rows() * times, m.cols());
  for (Index r = 0; r < m.rows(); ++r)
    for (Index s = 0; s < times; ++s) out.row(r * times + s) = m.row(r);
  return out;
}

/// Stacks `times` copies of `m`; row t * m.rows() + s is row s of `m`.
inline Matrix tile_rows(const Matrix& m, Index times) {
  Matrix out(m.rows() * times, m.cols());
  for (Index t = 0; t < times; ++t) out.middleRows(t * m.rows(), m.rows()) = m;
  return out;
}

inline Vector row_vector(const Matrix& m, Index r) { return m.row(r).transpose(); }

}  // namespace nplab::models::detail
