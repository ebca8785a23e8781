#include "nplab/numerics/autodiff.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "nplab/errors.hpp"

namespace nplab::ad {
namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
  }
}

Tape& tape_of(Var a) {
  if (!a.valid()) throw ContractError("operation on an unbound Var");
  return *a.tape();
}

Tape& tape_of(Var a, Var b) {
  if (a.tape() != b.tape()) throw ContractError("operands live on different tapes");
  return tape_of(a);
}

// Sums the rows of `block` pairwise, level by level, carrying an odd tail.
Eigen::RowVectorXd pairwise_row_sum(Matrix block) {
  Index n = block.rows();
  if (n == 0) return Eigen::RowVectorXd::Zero(block.cols());
  while (n > 1) {
    const Index half = n / 2;
    for (Index i = 0; i < half; ++i) block.row(i) = block.row(2 * i) + block.row(2 * i + 1);
    if (n % 2 == 1) {
      block.row(half) = block.row(n - 1);
      n = half + 1;
    } else {
      n = half;
    }
  }
  return block.row(0);
}

}  // namespace

const Matrix& Var::value() const { return tape_->value(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw ContractError("scalar() on a non-scalar node");
  return v(0, 0);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, false, {}});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::parameter(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, true, {}});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::record(Matrix value, std::span<const Var> parents, Backward backward) {
  bool needs = false;
  for (const Var& p : parents) {
    if (p.tape() != this) throw ContractError("parent node belongs to another tape");
    needs = needs || nodes_[p.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(backward) : Backward{}});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(int id, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var root) {
  if (root.tape() != this) throw ContractError("backward root belongs to another tape");
  if (nodes_[root.id()].value.size() != 1) throw ContractError("backward root must be scalar");
  for (Node& n : nodes_) n.grad.resize(0, 0);
  nodes_[root.id()].grad = Matrix::Ones(1, 1);
  for (int id = root.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || !n.backward || n.grad.size() == 0) continue;
    const Matrix upstream = n.grad;
    n.backward(upstream, *this);
  }
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "add");
  const int ia = a.id(), ib = b.id();
  const Var parents[] = {a, b};
  return t.record(a.value() + b.value(), parents, [ia, ib](const Matrix& g, Tape& tp) {
    tp.accumulate(ia, g);
    tp.accumulate(ib, g);
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  const int ia = a.id(), ib = b.id();
  const Var parents[] = {a, b};
  return t.record(a.value() - b.value(), parents, [ia, ib](const Matrix& g, Tape& tp) {
    tp.accumulate(ia, g);
    tp.accumulate(ib, -g);
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  const int ia = a.id(), ib = b.id();
  const Var parents[] = {a, b};
  return t.record(a.value().cwiseProduct(b.value()), parents, [ia, ib](const Matrix& g, Tape& tp) {
    tp.accumulate(ia, g.cwiseProduct(tp.value(ib)));
    tp.accumulate(ib, g.cwiseProduct(tp.value(ia)));
  });
}

Var scale(Var a, double c) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  const Var parents[] = {a};
  return t.record(c * a.value(), parents, [ia, c](const Matrix& g, Tape& tp) { tp.accumulate(ia, c * g); });
}

Var add_constant(Var a, const Matrix& c) {
  Tape& t = tape_of(a);
  require_same_shape(a.value(), c, "add_constant");
  const int ia = a.id();
  const Var parents[] = {a};
  return t.record(a.value() + c, parents, [ia](const Matrix& g, Tape& tp) { tp.accumulate(ia, g); });
}

Var mul_constant(Var a, const Matrix& c) {
  Tape& t = tape_of(a);
  require_same_shape(a.value(), c, "mul_constant");
  const int ia = a.id();
  const Var parents[] = {a};
  return t.record(a.value().cwiseProduct(c), parents,
                  [ia, c](const Matrix& g, Tape& tp) { tp.accumulate(ia, g.cwiseProduct(c)); });
}

Var exp(Var a) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  const int io = static_cast<int>(t.size());
  const Var parents[] = {a};
  return t.record(a.value().array().exp().matrix(), parents, [ia, io](const Matrix& g, Tape& tp) {
    tp.accumulate(ia, g.cwiseProduct(tp.value(io)));
  });
}

Var log(Var a) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  const Var parents[] = {a};
  return t.record(a.value().array().log().matrix(), parents, [ia](const Matrix& g, Tape& tp) {
    tp.accumulate(ia, g.cwiseQuotient(tp.value(ia)));
  });
}

Var square(Var a) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  const Var parents[] = {a};
  return t.record(a.value().cwiseAbs2(), parents, [ia](const Matrix& g, Tape& tp) {
    tp.accumulate(ia, 2.0 * g.cwiseProduct(tp.value(ia)));
  });
}

Var leaky_relu(Var a, double slope) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  const Var parents[] = {a};
  Matrix out = a.value().unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
  return t.record(std::move(out), parents, [ia, slope](const Matrix& g, Tape& tp) {
    const Matrix& x = tp.value(ia);
    Matrix d = g;
    for (Index i = 0; i < d.size(); ++i)
      if (!(x.data()[i] > 0.0)) d.data()[i] *= slope;
    tp.accumulate(ia, d);
  });
}

Var clamp(Var a, double lo, double hi) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  const Var parents[] = {a};
  Matrix out = a.value().cwiseMax(lo).cwiseMin(hi);
  return t.record(std::move(out), parents, [ia, lo, hi](const Matrix& g, Tape& tp) {
    const Matrix& x = tp.value(ia);
    Matrix d = g;
    for (Index i = 0; i < d.size(); ++i)
      if (!(x.data()[i] > lo && x.data()[i] < hi)) d.data()[i] = 0.0;
    tp.accumulate(ia, d);
  });
}

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  if (a.cols() != b.rows()) throw DimensionError("matmul: inner dimensions differ");
  const int ia = a.id(), ib = b.id();
  const Var parents[] = {a, b};
  Matrix out = a.value() * b.value();
  return t.record(std::move(out), parents, [ia, ib](const Matrix& g, Tape& tp) {
    if (tp.requires_grad(ia)) tp.accumulate(ia, g * tp.value(ib).transpose());
    if (tp.requires_grad(ib)) tp.accumulate(ib, tp.value(ia).transpose() * g);
  });
}

Var linear(Var x, Var weight, Var bias) {
  Tape& t = tape_of(x, weight);
  if (bias.tape() != &t) throw ContractError("operands live on different tapes");
  const Matrix& xv = x.value();
  const Matrix& w = weight.value();
  const Matrix& b = bias.value();
  if (xv.cols() != w.cols()) {
    throw DimensionError("linear: input has " + std::to_string(xv.cols()) + " features, layer expects " +
                         std::to_string(w.cols()));
  }
  if (b.rows() != w.rows() || b.cols() != 1) throw DimensionError("linear: bias shape mismatch");
  Matrix out(xv.rows(), w.rows());
  out.noalias() = xv * w.transpose();
  out.rowwise() += b.col(0).transpose();
  const int ix = x.id(), iw = weight.id(), ib = bias.id();
  const Var parents[] = {x, weight, bias};
  return t.record(std::move(out), parents, [ix, iw, ib](const Matrix& g, Tape& tp) {
    if (tp.requires_grad(ix)) {
      Matrix dx(g.rows(), tp.value(iw).cols());
      dx.noalias() = g * tp.value(iw);
      tp.accumulate(ix, dx);
    }
    if (tp.requires_grad(iw)) {
      Matrix dw(g.cols(), tp.value(ix).cols());
      dw.noalias() = g.transpose() * tp.value(ix);
      tp.accumulate(iw, dw);
    }
    if (tp.requires_grad(ib)) tp.accumulate(ib, g.colwise().sum().transpose());
  });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  const Index r = a.rows(), c = a.cols();
  const Var parents[] = {a};
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return t.record(std::move(out), parents, [ia, r, c](const Matrix& g, Tape& tp) {
    tp.accumulate(ia, Matrix::Constant(r, c, g(0, 0)));
  });
}

Var row_sum(Var a) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  const Index c = a.cols();
  const Var parents[] = {a};
  return t.record(a.value().rowwise().sum(), parents, [ia, c](const Matrix& g, Tape& tp) {
    tp.accumulate(ia, g.col(0).replicate(1, c));
  });
}

Var weighted_sum(Var a, std::span<const double> weights) {
  Tape& t = tape_of(a);
  if (a.cols() != 1 || a.rows() != static_cast<Index>(weights.size()))
    throw DimensionError("weighted_sum: expects a column matching the weight count");
  const Eigen::Map<const Vector> w(weights.data(), static_cast<Index>(weights.size()));
  Matrix out(1, 1);
  out(0, 0) = a.value().col(0).dot(w);
  const int ia = a.id();
  Matrix wcol = w;
  const Var parents[] = {a};
  return t.record(std::move(out), parents, [ia, wcol](const Matrix& g, Tape& tp) {
    tp.accumulate(ia, g(0, 0) * wcol);
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  Tape& t = tape_of(parts.front());
  const Index rows = parts.front().rows();
  Index cols = 0;
  for (const Var& p : parts) {
    if (p.tape() != &t) throw ContractError("operands live on different tapes");
    if (p.rows() != rows) throw DimensionError("concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<std::pair<int, Index>> spans;
  Index off = 0;
  for (const Var& p : parts) {
    out.middleCols(off, p.cols()) = p.value();
    spans.emplace_back(p.id(), p.cols());
    off += p.cols();
  }
  return t.record(std::move(out), parts, [spans](const Matrix& g, Tape& tp) {
    Index o = 0;
    for (const auto& [id, c] : spans) {
      if (tp.requires_grad(id)) tp.accumulate(id, g.middleCols(o, c));
      o += c;
    }
  });
}

Var slice_cols(Var a, Index start, Index count) {
  Tape& t = tape_of(a);
  if (start < 0 || count < 0 || start + count > a.cols()) throw DimensionError("slice_cols: out of range");
  const int ia = a.id();
  const Index r = a.rows(), c = a.cols();
  const Var parents[] = {a};
  return t.record(a.value().middleCols(start, count), parents,
                  [ia, r, c, start, count](const Matrix& g, Tape& tp) {
                    Matrix d = Matrix::Zero(r, c);
                    d.middleCols(start, count) = g;
                    tp.accumulate(ia, d);
                  });
}

Var gather_rows(Var a, std::span<const int> rows) {
  Tape& t = tape_of(a);
  const Matrix& v = a.value();
  Matrix out(static_cast<Index>(rows.size()), v.cols());
  for (Index i = 0; i < out.rows(); ++i) {
    const int r = rows[i];
    if (r < 0 || r >= v.rows()) throw DimensionError("gather_rows: row index out of range");
    out.row(i) = v.row(r);
  }
  const int ia = a.id();
  const Index nr = v.rows(), nc = v.cols();
  std::vector<int> idx(rows.begin(), rows.end());
  const Var parents[] = {a};
  return t.record(std::move(out), parents, [ia, nr, nc, idx](const Matrix& g, Tape& tp) {
    Matrix d = Matrix::Zero(nr, nc);
    for (std::size_t i = 0; i < idx.size(); ++i) d.row(idx[i]) += g.row(static_cast<Index>(i));
    tp.accumulate(ia, d);
  });
}

Var segment_mean(Var a, const std::vector<std::vector<int>>& segments) {
  Tape& t = tape_of(a);
  const Matrix& v = a.value();
  Matrix out(static_cast<Index>(segments.size()), v.cols());
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const auto& seg = segments[s];
    if (seg.empty()) throw ContractError("segment_mean: empty segment");
    Matrix block(static_cast<Index>(seg.size()), v.cols());
    for (std::size_t i = 0; i < seg.size(); ++i) {
      if (seg[i] < 0 || seg[i] >= v.rows()) throw DimensionError("segment_mean: row index out of range");
      block.row(static_cast<Index>(i)) = v.row(seg[i]);
    }
    out.row(static_cast<Index>(s)) = pairwise_row_sum(std::move(block)) / static_cast<double>(seg.size());
  }
  const int ia = a.id();
  const Index nr = v.rows(), nc = v.cols();
  const Var parents[] = {a};
  return t.record(std::move(out), parents, [ia, nr, nc, segments](const Matrix& g, Tape& tp) {
    Matrix d = Matrix::Zero(nr, nc);
    for (std::size_t s = 0; s < segments.size(); ++s) {
      const double inv = 1.0 / static_cast<double>(segments[s].size());
      for (int r : segments[s]) d.row(r) += inv * g.row(static_cast<Index>(s));
    }
    tp.accumulate(ia, d);
  });
}

Var gaussian_log_prob_rows(const Matrix& y, Var mean, Var log_var) {
  Tape& t = tape_of(mean, log_var);
  require_same_shape(y, mean.value(), "gaussian_log_prob_rows");
  require_same_shape(y, log_var.value(), "gaussian_log_prob_rows");
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  const Matrix inv_var = (-log_var.value()).array().exp().matrix();
  const Matrix diff = y - mean.value();
  Matrix terms = (-half_log_2pi - 0.5 * log_var.value().array() - 0.5 * diff.array().square() * inv_var.array())
                     .matrix();
  Matrix out = terms.rowwise().sum();
  const int im = mean.id(), il = log_var.id();
  const Var parents[] = {mean, log_var};
  return t.record(std::move(out), parents, [im, il, inv_var, diff](const Matrix& g, Tape& tp) {
    const Index c = diff.cols();
    const Matrix gb = g.col(0).replicate(1, c);
    // d/dmean = diff / var, d/dlogvar = -0.5 + 0.5 diff^2 / var
    tp.accumulate(im, gb.cwiseProduct(diff.cwiseProduct(inv_var)));
    tp.accumulate(il, gb.cwiseProduct((0.5 * diff.array().square() * inv_var.array() - 0.5).matrix()));
  });
}

Var kl_diag_rows(Var q_mean, Var q_log_var, Var p_mean, Var p_log_var) {
  Tape& t = tape_of(q_mean, p_mean);
  require_same_shape(q_mean.value(), p_mean.value(), "kl_diag_rows");
  require_same_shape(q_log_var.value(), p_log_var.value(), "kl_diag_rows");
  require_same_shape(q_mean.value(), q_log_var.value(), "kl_diag_rows");
  const Matrix ratio = (q_log_var.value() - p_log_var.value()).array().exp().matrix();
  const Matrix inv_p = (-p_log_var.value()).array().exp().matrix();
  const Matrix diff = q_mean.value() - p_mean.value();
  Matrix terms = 0.5 * (ratio.array() + diff.array().square() * inv_p.array() - 1.0 + p_log_var.value().array() -
                        q_log_var.value().array())
                           .matrix();
  Matrix out = terms.rowwise().sum();
  const int iqm = q_mean.id(), iql = q_log_var.id(), ipm = p_mean.id(), ipl = p_log_var.id();
  const Var parents[] = {q_mean, q_log_var, p_mean, p_log_var};
  return t.record(std::move(out), parents, [=](const Matrix& g, Tape& tp) {
    const Matrix gb = g.col(0).replicate(1, diff.cols());
    const Matrix dmean = diff.cwiseProduct(inv_p);
    tp.accumulate(iqm, gb.cwiseProduct(dmean));
    tp.accumulate(ipm, -gb.cwiseProduct(dmean));
    tp.accumulate(iql, gb.cwiseProduct((0.5 * (ratio.array() - 1.0)).matrix()));
    tp.accumulate(ipl, gb.cwiseProduct(
                           (0.5 * (1.0 - ratio.array() - diff.array().square() * inv_p.array())).matrix()));
  });
}

Var reparameterize(Var mean, Var log_var, const Matrix& noise) {
  return add(mean, mul_constant(exp(scale(log_var, 0.5)), noise));
}

double pairwise_sum(std::span<const double> values) {
  Matrix block(static_cast<Index>(values.size()), 1);
  for (std::size_t i = 0; i < values.size(); ++i) block(static_cast<Index>(i), 0) = values[i];
  return pairwise_row_sum(std::move(block))(0);
}

}  // namespace nplab::ad
