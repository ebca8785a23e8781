#pragma once

#include <functional>
#include <span>
#include <vector>

#include "nplab/numerics/matrix.hpp"

namespace nplab::ad {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  double scalar() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Reverse-mode differentiation tape.
///
/// Nodes are appended in evaluation order, so a single reverse sweep from the
/// root visits every node after all of its consumers.
class Tape {
 public:
  /// Receives the upstream gradient of the node and pushes contributions to
  /// its parents through accumulate().
  using Backward = std::function<void(const Matrix& upstream, Tape& tape)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var parameter(Matrix value);
  Var record(Matrix value, std::span<const Var> parents, Backward backward);

  const Matrix& value(int id) const { return nodes_[id].value; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  /// Gradient of the last backward() root w.r.t. the node; zeros if untouched.
  Matrix grad(Var v) const;

  void accumulate(int id, const Matrix& g);

  /// Root must be 1x1.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
};

// Elementwise and structural ops. Shapes must agree unless noted.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var add_constant(Var a, const Matrix& c);
Var mul_constant(Var a, const Matrix& c);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
Var leaky_relu(Var a, double slope);
/// Gradient is passed only where lo < a < hi.
Var clamp(Var a, double lo, double hi);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(double c, Var a) { return scale(a, c); }

Var matmul(Var a, Var b);
/// x (R x in), weight (out x in), bias (out x 1) -> x weight^T + 1 bias^T.
Var linear(Var x, Var weight, Var bias);

Var sum(Var a);
/// Row sums: (R x C) -> (R x 1).
Var row_sum(Var a);
/// Sum_r w_r * a_r for a column a (R x 1) -> 1x1.
Var weighted_sum(Var a, std::span<const double> weights);

Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var a, Index start, Index count);
Var gather_rows(Var a, std::span<const int> rows);

/// Mean of the listed rows of `a` for every segment -> (segments x C).
/// Rows are summed pairwise in the listed order, so callers that list rows in
/// a canonical order get results that do not depend on input order.
Var segment_mean(Var a, const std::vector<std::vector<int>>& segments);

/// Per-row diagonal Gaussian log density, summed over columns -> (R x 1).
Var gaussian_log_prob_rows(const Matrix& y, Var mean, Var log_var);
/// Per-row KL(q || p) of diagonal Gaussians -> (R x 1).
Var kl_diag_rows(Var q_mean, Var q_log_var, Var p_mean, Var p_log_var);

/// mean + exp(0.5 log_var) * noise.
Var reparameterize(Var mean, Var log_var, const Matrix& noise);

/// Pairwise summation over a list of values in the given order.
double pairwise_sum(std::span<const double> values);

}  // namespace nplab::ad
