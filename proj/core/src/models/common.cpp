#include "nplab/models/common.hpp"

#include <cmath>

#include "nplab/errors.hpp"

namespace nplab::models {

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::cnp: return "cnp";
    case ModelKind::np: return "np";
    case ModelKind::dnp: return "dnp";
  }
  return "dnp";
}

std::string to_string(AttentionKind k) { return k == AttentionKind::laplace ? "laplace" : "dot"; }

std::string to_string(VarianceMode m) { return m == VarianceMode::literal ? "literal" : "log_weighted"; }

ModelKind parse_model_kind(std::string_view s) {
  if (s == "cnp") return ModelKind::cnp;
  if (s == "np") return ModelKind::np;
  if (s == "dnp") return ModelKind::dnp;
  throw ConfigError("unknown model '" + std::string(s) + "' (expected cnp, np, dnp)");
}

AttentionKind parse_attention_kind(std::string_view s) {
  if (s == "laplace") return AttentionKind::laplace;
  if (s == "dot") return AttentionKind::dot;
  throw ConfigError("unknown attention '" + std::string(s) + "' (expected laplace, dot)");
}

VarianceMode parse_variance_mode(std::string_view s) {
  if (s == "literal") return VarianceMode::literal;
  if (s == "log_weighted" || s == "log-weighted") return VarianceMode::log_weighted;
  throw ConfigError("unknown variance mode '" + std::string(s) + "' (expected literal, log_weighted)");
}

void ModelDims::validate() const {
  if (x < 1 || y < 1 || h < 1 || z < 1 || u < 1) throw ConfigError("dims: every dimension must be >= 1");
}

DiagGaussian moment_match(const PointPredictive& p) {
  const Matrix var = p.log_var.array().exp().matrix();
  const Vector mean = p.mean.colwise().mean().transpose();
  Vector second = (var + p.mean.cwiseAbs2()).colwise().mean().transpose();
  Vector total = (second - mean.cwiseAbs2()).cwiseMax(1e-300);
  return {mean, total.array().log().matrix()};
}

GaussianRows split_gaussian(ad::Var head_out) {
  const Index d = head_out.cols() / 2;
  if (head_out.cols() != 2 * d) throw DimensionError("split_gaussian: head output width is odd");
  return {ad::slice_cols(head_out, 0, d), ad::clamp(ad::slice_cols(head_out, d, d), kMinLogVar, kMaxLogVar)};
}

DiagGaussian row_gaussian(const Matrix& mean, const Matrix& log_var, Index r) {
  return {mean.row(r).transpose(), log_var.row(r).transpose()};
}

Matrix stack_rows(std::span<const Vector> vs) {
  if (vs.empty()) return Matrix(0, 0);
  Matrix m(static_cast<Index>(vs.size()), vs.front().size());
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (vs[i].size() != m.cols()) throw DimensionError("stack_rows: ragged input");
    m.row(static_cast<Index>(i)) = vs[i].transpose();
  }
  return m;
}

}  // namespace nplab::models
