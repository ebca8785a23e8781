#pragma once

#include <span>
#include <vector>

#include "nplab/models/common.hpp"
#include "nplab/models/layout.hpp"

namespace nplab::models {

struct AttentionConfig {
  AttentionKind kind = AttentionKind::laplace;
  bool normalize = true;
  VarianceMode variance_mode = VarianceMode::log_weighted;
};

/// Weights of one target embedding over the context embeddings.
///
/// Laplace scores are -||u_t - u_c|| / sqrt(d_u); dot scores are
/// u_t . u_c / sqrt(d_u). Normalized weights are the softmax of the scores,
/// unnormalized weights are exp(score).
std::vector<double> attention_weights(const Vector& u_target, std::span<const Vector> u_context,
                                      AttentionKind kind, bool normalize);

std::vector<double> laplace_attention(const Vector& u_target, std::span<const Vector> u_context, bool normalize);

/// Target-specific local prior from weighted per-context Gaussian parameters.
///
/// mean = sum_c a_c mu_c. Log-weighted: log_var = sum_c a_c s_c. Literal:
/// var = sum_c exp(a_c s_c). The result is not clamped.
DiagGaussian local_prior(std::span<const double> weights, std::span<const Vector> context_mu,
                         std::span<const Vector> context_log_var, VarianceMode mode);

/// Differentiable batched local prior.
///
/// For every query q of `table`, attends from embedding row `query_rows[q]`
/// of `u` over the rows `table.at(q, j)` and mixes the matching rows of
/// `mu` and `log_var`. Returns (Q x d_z) mean and unclamped log-variance.
GaussianRows attend_local_prior(ad::Var u, ad::Var mu, ad::Var log_var, std::span<const int> query_rows,
                                const ContextTable& table, const AttentionConfig& cfg);

/// Value-only counterpart of attend_local_prior, used at prediction time.
void local_prior_rows(const Matrix& u, const Matrix& mu, const Matrix& log_var, std::span<const int> query_rows,
                      const ContextTable& table, const AttentionConfig& cfg, Matrix& out_mean, Matrix& out_log_var);

}  // namespace nplab::models
