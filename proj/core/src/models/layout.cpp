#include "nplab/models/layout.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "nplab/errors.hpp"

namespace nplab::models {
namespace {

bool row_less(const Matrix& x, const Matrix& y, int a, int b) {
  for (Index c = 0; c < x.cols(); ++c)
    if (x(a, c) != x(b, c)) return x(a, c) < x(b, c);
  for (Index c = 0; c < y.cols(); ++c)
    if (y(a, c) != y(b, c)) return y(a, c) < y(b, c);
  return false;
}

void canonical_sort(const Matrix& x, const Matrix& y, std::vector<int>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [&](int a, int b) { return row_less(x, y, a, b); });
}

std::vector<double> key_of(const Vector& x, const Vector& y) {
  std::vector<double> k(x.data(), x.data() + x.size());
  k.insert(k.end(), y.data(), y.data() + y.size());
  return k;
}

void finish(BatchLayout& layout) {
  const double n_tasks = static_cast<double>(layout.tasks.size());
  int width = 0;
  for (const TaskRows& t : layout.tasks) width = std::max(width, static_cast<int>(t.context.size()));
  layout.table.width = width;
  for (std::size_t ti = 0; ti < layout.tasks.size(); ++ti) {
    const TaskRows& t = layout.tasks[ti];
    for (int r : t.targets) {
      layout.query_rows.push_back(r);
      layout.query_task.push_back(static_cast<int>(ti));
      layout.query_weight.push_back(1.0 / (n_tasks * static_cast<double>(t.targets.size())));
      for (int j = 0; j < width; ++j)
        layout.table.index.push_back(j < static_cast<int>(t.context.size()) ? t.context[static_cast<std::size_t>(j)] : -1);
      layout.table.count.push_back(static_cast<int>(t.context.size()));
    }
  }
}

}  // namespace

std::vector<std::vector<int>> BatchLayout::context_segments() const {
  std::vector<std::vector<int>> s;
  for (const TaskRows& t : tasks) s.push_back(t.context);
  return s;
}

std::vector<std::vector<int>> BatchLayout::target_segments() const {
  std::vector<std::vector<int>> s;
  for (const TaskRows& t : tasks) s.push_back(t.targets_sorted);
  return s;
}

std::vector<int> BatchLayout::labelled_rows() const {
  std::vector<char> mark(static_cast<std::size_t>(x.rows()), 0);
  for (const TaskRows& t : tasks) {
    for (int r : t.context) mark[static_cast<std::size_t>(r)] = 1;
    if (t.labelled_targets)
      for (int r : t.targets) mark[static_cast<std::size_t>(r)] = 1;
  }
  std::vector<int> rows;
  for (std::size_t i = 0; i < mark.size(); ++i)
    if (mark[i]) rows.push_back(static_cast<int>(i));
  return rows;
}

BatchLayout make_training_layout(std::span<const taskgen::Task> tasks) {
  if (tasks.empty()) throw ContractError("make_training_layout: no tasks");
  Index rows = 0;
  for (const taskgen::Task& t : tasks) {
    t.validate();
    if (t.x_context.empty()) throw ContractError("make_training_layout: empty context set");
    rows += static_cast<Index>(t.x_target.size() + t.x_context.size());
  }
  const Index dx = tasks.front().x_dim(), dy = tasks.front().y_dim();
  BatchLayout layout;
  layout.x.resize(rows, dx);
  layout.y.resize(rows, dy);
  Index next = 0;
  const auto push = [&](const Vector& xv, const Vector& yv) {
    if (xv.size() != dx || yv.size() != dy) throw DimensionError("make_training_layout: tasks have different dimensions");
    layout.x.row(next) = xv.transpose();
    layout.y.row(next) = yv.transpose();
    return static_cast<int>(next++);
  };
  for (const taskgen::Task& t : tasks) {
    TaskRows tr;
    std::map<std::vector<double>, int> by_value;
    for (std::size_t i = 0; i < t.x_target.size(); ++i) {
      const int r = push(t.x_target[i], t.y_target[i]);
      tr.targets.push_back(r);
      by_value.emplace(key_of(t.x_target[i], t.y_target[i]), r);
    }
    for (std::size_t i = 0; i < t.x_context.size(); ++i) {
      const auto it = by_value.find(key_of(t.x_context[i], t.y_context[i]));
      tr.context.push_back(it != by_value.end() ? it->second : push(t.x_context[i], t.y_context[i]));
    }
    layout.tasks.push_back(std::move(tr));
  }
  layout.x.conservativeResize(next, dx);
  layout.y.conservativeResize(next, dy);
  for (TaskRows& tr : layout.tasks) {
    canonical_sort(layout.x, layout.y, tr.context);
    tr.targets_sorted = tr.targets;
    canonical_sort(layout.x, layout.y, tr.targets_sorted);
  }
  finish(layout);
  return layout;
}

BatchLayout make_query_layout(std::span<const Vector> x_context, std::span<const Vector> y_context,
                              std::span<const Vector> x_query) {
  if (x_context.empty()) throw ContractError("make_query_layout: empty context set");
  if (x_context.size() != y_context.size()) throw ContractError("make_query_layout: context x/y counts differ");
  const Index dx = x_context.front().size(), dy = y_context.front().size();
  const Index m = static_cast<Index>(x_context.size()), q = static_cast<Index>(x_query.size());

  // Place context rows physically in canonical order so that the stacked
  // matrices, not only the index lists, are independent of input order.
  Matrix cx(m, dx), cy(m, dy);
  for (Index i = 0; i < m; ++i) {
    if (x_context[i].size() != dx || y_context[i].size() != dy) throw DimensionError("make_query_layout: ragged context");
    cx.row(i) = x_context[i].transpose();
    cy.row(i) = y_context[i].transpose();
  }
  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  canonical_sort(cx, cy, order);

  BatchLayout layout;
  layout.x.resize(m + q, dx);
  layout.y = Matrix::Zero(m + q, dy);
  TaskRows tr;
  tr.labelled_targets = false;
  for (Index i = 0; i < m; ++i) {
    layout.x.row(i) = cx.row(order[static_cast<std::size_t>(i)]);
    layout.y.row(i) = cy.row(order[static_cast<std::size_t>(i)]);
    tr.context.push_back(static_cast<int>(i));
  }
  for (Index i = 0; i < q; ++i) {
    if (x_query[i].size() != dx) throw DimensionError("make_query_layout: query dimension mismatch");
    layout.x.row(m + i) = x_query[i].transpose();
    tr.targets.push_back(static_cast<int>(m + i));
  }
  tr.targets_sorted = tr.targets;
  layout.tasks.push_back(std::move(tr));
  finish(layout);
  return layout;
}

}  // namespace nplab::models
