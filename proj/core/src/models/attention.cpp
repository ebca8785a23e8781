#include "nplab/models/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nplab/errors.hpp"

namespace nplab::models {
namespace {

using ConstRow = Eigen::Map<const Eigen::RowVectorXd>;
using RowRef = Eigen::Map<Eigen::RowVectorXd>;

double score(const double* ut, const double* uc, Index du, AttentionKind kind) {
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(du));
  const ConstRow a(ut, du), b(uc, du);
  if (kind == AttentionKind::dot) return a.dot(b) * inv_sqrt;
  return -std::sqrt((a - b).squaredNorm()) * inv_sqrt;
}

void weights_from_scores(std::vector<double>& s, bool normalize) {
  if (!normalize) {
    for (double& v : s) v = std::exp(v);
    return;
  }
  const double m = *std::max_element(s.begin(), s.end());
  double total = 0.0;
  for (double& v : s) {
    v = std::exp(v - m);
    total += v;
  }
  for (double& v : s) v /= total;
}

// Mixes the context parameters of one query into mean/log_var rows.
void mix(const std::vector<double>& alpha, const std::vector<int>& rows, const Matrix& mu, const Matrix& lv,
         VarianceMode mode, double* mean_out, double* lv_out) {
  const Index dz = mu.cols();
  RowRef mean(mean_out, dz), logv(lv_out, dz);
  mean.setZero();
  for (std::size_t j = 0; j < rows.size(); ++j) mean += alpha[j] * mu.row(rows[j]);
  if (mode == VarianceMode::log_weighted) {
    logv.setZero();
    for (std::size_t j = 0; j < rows.size(); ++j) logv += alpha[j] * lv.row(rows[j]);
    return;
  }
  // log sum_j exp(alpha_j s_j), stabilized per dimension.
  for (Index k = 0; k < dz; ++k) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < rows.size(); ++j)
      peak = std::max(peak, alpha[j] * lv(rows[j], k));
    double acc = 0.0;
    for (std::size_t j = 0; j < rows.size(); ++j) acc += std::exp(alpha[j] * lv(rows[j], k) - peak);
    lv_out[k] = peak + std::log(acc);
  }
}

std::vector<int> rows_of(const ContextTable& table, std::size_t q) {
  std::vector<int> rows(static_cast<std::size_t>(table.count[q]));
  for (int j = 0; j < table.count[q]; ++j) rows[static_cast<std::size_t>(j)] = table.at(q, j);
  return rows;
}

std::vector<double> query_weights(const Matrix& u, int qrow, const std::vector<int>& rows, const AttentionConfig& cfg) {
  const Index du = u.cols();
  std::vector<double> s(rows.size());
  for (std::size_t j = 0; j < rows.size(); ++j)
    s[j] = score(u.data() + static_cast<Index>(qrow) * du, u.data() + static_cast<Index>(rows[j]) * du, du, cfg.kind);
  weights_from_scores(s, cfg.normalize);
  return s;
}

void check_inputs(const Matrix& u, const Matrix& mu, const Matrix& lv, std::span<const int> query_rows,
                  const ContextTable& table) {
  if (mu.rows() != u.rows() || lv.rows() != u.rows() || mu.cols() != lv.cols())
    throw DimensionError("attend_local_prior: embedding and parameter rows disagree");
  if (query_rows.size() != table.queries()) throw DimensionError("attend_local_prior: query count mismatch");
  for (int c : table.count)
    if (c < 1) throw ContractError("attend_local_prior: empty context set");
}

}  // namespace

std::vector<double> attention_weights(const Vector& u_target, std::span<const Vector> u_context, AttentionKind kind,
                                      bool normalize) {
  if (u_context.empty()) throw ContractError("attention: empty context set");
  std::vector<double> s;
  s.reserve(u_context.size());
  for (const Vector& uc : u_context) {
    if (uc.size() != u_target.size()) throw DimensionError("attention: embedding dimensions differ");
    s.push_back(score(u_target.data(), uc.data(), u_target.size(), kind));
  }
  weights_from_scores(s, normalize);
  return s;
}

std::vector<double> laplace_attention(const Vector& u_target, std::span<const Vector> u_context, bool normalize) {
  return attention_weights(u_target, u_context, AttentionKind::laplace, normalize);
}

DiagGaussian local_prior(std::span<const double> weights, std::span<const Vector> context_mu,
                         std::span<const Vector> context_log_var, VarianceMode mode) {
  if (weights.size() != context_mu.size() || weights.size() != context_log_var.size() || weights.empty())
    throw DimensionError("local_prior: weights and context parameters must align");
  const Matrix mu = stack_rows(context_mu), lv = stack_rows(context_log_var);
  if (mu.cols() != lv.cols()) throw DimensionError("local_prior: mean and log-variance dims differ");
  std::vector<int> rows(weights.size());
  for (std::size_t j = 0; j < rows.size(); ++j) rows[j] = static_cast<int>(j);
  DiagGaussian out{Vector(mu.cols()), Vector(mu.cols())};
  mix(std::vector<double>(weights.begin(), weights.end()), rows, mu, lv, mode, out.mean.data(), out.log_var.data());
  return out;
}

void local_prior_rows(const Matrix& u, const Matrix& mu, const Matrix& log_var, std::span<const int> query_rows,
                      const ContextTable& table, const AttentionConfig& cfg, Matrix& out_mean, Matrix& out_log_var) {
  check_inputs(u, mu, log_var, query_rows, table);
  const Index q = static_cast<Index>(query_rows.size()), dz = mu.cols();
  out_mean.resize(q, dz);
  out_log_var.resize(q, dz);
  for (Index i = 0; i < q; ++i) {
    const std::vector<int> rows = rows_of(table, static_cast<std::size_t>(i));
    const std::vector<double> alpha = query_weights(u, query_rows[static_cast<std::size_t>(i)], rows, cfg);
    mix(alpha, rows, mu, log_var, cfg.variance_mode, out_mean.data() + i * dz, out_log_var.data() + i * dz);
  }
}

GaussianRows attend_local_prior(ad::Var u, ad::Var mu, ad::Var log_var, std::span<const int> query_rows,
                                const ContextTable& table, const AttentionConfig& cfg) {
  ad::Tape& tape = *u.tape();
  if (mu.tape() != &tape || log_var.tape() != &tape) throw ContractError("attend_local_prior: mixed tapes");
  const Matrix& uv = u.value();
  const Matrix& muv = mu.value();
  const Matrix& lvv = log_var.value();
  check_inputs(uv, muv, lvv, query_rows, table);
  const Index q = static_cast<Index>(query_rows.size()), dz = muv.cols();

  Matrix out(q, 2 * dz);
  std::vector<std::vector<double>> alphas(static_cast<std::size_t>(q));
  for (Index i = 0; i < q; ++i) {
    const std::vector<int> rows = rows_of(table, static_cast<std::size_t>(i));
    alphas[static_cast<std::size_t>(i)] = query_weights(uv, query_rows[static_cast<std::size_t>(i)], rows, cfg);
    double* row = out.data() + i * 2 * dz;
    mix(alphas[static_cast<std::size_t>(i)], rows, muv, lvv, cfg.variance_mode, row, row + dz);
  }

  const int iu = u.id(), im = mu.id(), il = log_var.id();
  const int io = static_cast<int>(tape.size());
  std::vector<int> qrows(query_rows.begin(), query_rows.end());
  const ad::Var parents[] = {u, mu, log_var};
  const ad::Var joint = tape.record(
      std::move(out), parents, [iu, im, il, io, qrows, table, cfg, alphas](const Matrix& g, ad::Tape& tp) {
        const Matrix& uv = tp.value(iu);
        const Matrix& muv = tp.value(im);
        const Matrix& lvv = tp.value(il);
        const Matrix& outv = tp.value(io);
        const Index dz = muv.cols(), du = uv.cols();
        const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(du));
        const bool literal = cfg.variance_mode == VarianceMode::literal;
        Matrix du_g = Matrix::Zero(uv.rows(), du);
        Matrix dmu = Matrix::Zero(muv.rows(), dz);
        Matrix dlv = Matrix::Zero(lvv.rows(), dz);
        std::vector<double> dalpha(static_cast<std::size_t>(table.width));
        for (std::size_t i = 0; i < qrows.size(); ++i) {
          const int m = table.count[i];
          const std::vector<double>& a = alphas[i];
          const double* gm = g.data() + static_cast<Index>(i) * 2 * dz;
          const double* gl = gm + dz;
          const double* lv_out = outv.data() + static_cast<Index>(i) * 2 * dz + dz;
          for (int j = 0; j < m; ++j) {
            const Index c = table.at(i, j);
            const double aj = a[static_cast<std::size_t>(j)];
            const ConstRow muc(muv.data() + c * dz, dz), lvc(lvv.data() + c * dz, dz);
            const ConstRow gmr(gm, dz), glr(gl, dz);
            RowRef dmuc(dmu.data() + c * dz, dz), dlvc(dlv.data() + c * dz, dz);
            dmuc += aj * gmr;
            double da = gmr.dot(muc);
            if (literal) {
              // d log sum exp / d(a_j s_jk) is the per-dimension softmax weight.
              const Eigen::RowVectorXd w = (aj * lvc - ConstRow(lv_out, dz)).array().exp().matrix();
              const Eigen::RowVectorXd gw = glr.cwiseProduct(w);
              dlvc += aj * gw;
              da += gw.dot(lvc);
            } else {
              dlvc += aj * glr;
              da += glr.dot(lvc);
            }
            dalpha[static_cast<std::size_t>(j)] = da;
          }
          double centre = 0.0;
          if (cfg.normalize)
            for (int j = 0; j < m; ++j) centre += a[static_cast<std::size_t>(j)] * dalpha[static_cast<std::size_t>(j)];
          const Index qr = qrows[i];
          const ConstRow uq(uv.data() + qr * du, du);
          RowRef duq(du_g.data() + qr * du, du);
          for (int j = 0; j < m; ++j) {
            const double ds = a[static_cast<std::size_t>(j)] * (dalpha[static_cast<std::size_t>(j)] - centre);
            if (ds == 0.0) continue;
            const Index c = table.at(i, j);
            const ConstRow uc(uv.data() + c * du, du);
            RowRef duc(du_g.data() + c * du, du);
            if (cfg.kind == AttentionKind::dot) {
              const double f = ds * inv_sqrt;
              duq += f * uc;
              duc += f * uq;
            } else {
              const double d = std::sqrt((uq - uc).squaredNorm());
              if (!(d > 0.0)) continue;  // coincident embeddings: zero subgradient
              const double f = -ds * inv_sqrt / d;
              duq += f * (uq - uc);
              duc -= f * (uq - uc);
            }
          }
        }
        if (tp.requires_grad(iu)) tp.accumulate(iu, du_g);
        if (tp.requires_grad(im)) tp.accumulate(im, dmu);
        if (tp.requires_grad(il)) tp.accumulate(il, dlv);
      });
  return {ad::slice_cols(joint, 0, dz), ad::slice_cols(joint, dz, dz)};
}

}  // namespace nplab::models
