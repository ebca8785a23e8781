#pragma once

#include <span>
#include <vector>

#include "nplab/numerics/matrix.hpp"
#include "nplab/taskgen/tasks.hpp"

namespace nplab::models {

/// For each query row, the rows of its task's context set (padded to a
/// common width).
struct ContextTable {
  int width = 0;
  std::vector<int> index;  // query q, slot j -> index[q * width + j]
  std::vector<int> count;  // valid slots per query

  std::size_t queries() const { return count.size(); }
  int at(std::size_t q, int j) const { return index[q * static_cast<std::size_t>(width) + static_cast<std::size_t>(j)]; }
};

/// Row indices of one task inside a stacked batch.
struct TaskRows {
  std::vector<int> context;         // canonical order
  std::vector<int> targets;         // task order; rows predicted or scored
  std::vector<int> targets_sorted;  // canonical order, for set summaries
  bool labelled_targets = true;
};

/// Points of several tasks stacked into shared matrices.
///
/// Context points that coincide with a labelled target share its row.
/// Context lists are kept in a canonical (lexicographic by x then y) order so
/// every set reduction is independent of the order the caller supplied.
struct BatchLayout {
  Matrix x;  // R x d_x
  Matrix y;  // R x d_y, zero on unlabelled query rows
  std::vector<TaskRows> tasks;

  std::vector<int> query_rows;  // concatenated targets of all tasks
  std::vector<int> query_task;  // owning task per query row
  std::vector<double> query_weight;  // 1 / (tasks * targets_in_task)
  ContextTable table;

  std::size_t task_count() const { return tasks.size(); }
  std::vector<std::vector<int>> context_segments() const;
  std::vector<std::vector<int>> target_segments() const;
  /// Rows that carry observed outputs.
  std::vector<int> labelled_rows() const;
};

/// Layout for scoring tasks: every target is labelled and scored.
BatchLayout make_training_layout(std::span<const taskgen::Task> tasks);

/// Layout for prediction: labelled context rows followed by unlabelled queries.
BatchLayout make_query_layout(std::span<const Vector> x_context, std::span<const Vector> y_context,
                              std::span<const Vector> x_query);

}  // namespace nplab::models
