#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "nplab/numerics/autodiff.hpp"
#include "nplab/numerics/gaussian.hpp"
#include "nplab/numerics/mlp.hpp"

namespace nplab::models {

enum class ModelKind { cnp, np, dnp };
enum class AttentionKind { laplace, dot };
enum class VarianceMode { literal, log_weighted };

std::string to_string(ModelKind k);
std::string to_string(AttentionKind k);
std::string to_string(VarianceMode m);
ModelKind parse_model_kind(std::string_view s);
AttentionKind parse_attention_kind(std::string_view s);
VarianceMode parse_variance_mode(std::string_view s);

struct ModelDims {
  int x = 1;
  int y = 1;
  int h = 64;
  int z = 64;
  int u = 64;

  void validate() const;
};

/// Monte Carlo predictive parameters for one point: one row per sample.
struct PointPredictive {
  Matrix mean;     // S x d_y
  Matrix log_var;  // S x d_y
};

/// Per-target sample of predictive Gaussians; the predictive density at y is
/// the equal-weight mixture over samples.
struct PredictiveSet {
  std::vector<PointPredictive> points;

  std::size_t size() const { return points.size(); }
  Index samples() const { return points.empty() ? 0 : points.front().mean.rows(); }
};

/// Mixture mean and variance of one predictive point (per output dimension).
DiagGaussian moment_match(const PointPredictive& p);

/// Loss value and its reported components for one batch.
struct LossTerms {
  ad::Var loss;             // minimized objective
  double recon = 0.0;       // mean negative target log-likelihood
  double kl_global = 0.0;   // mean over tasks
  double kl_local = 0.0;    // mean over tasks of per-target mean
  double bilip = 0.0;       // unweighted regularizer value
};

/// Splits an (R x 2d) head output into mean and clamped log-variance.
struct GaussianRows {
  ad::Var mean;
  ad::Var log_var;
};
GaussianRows split_gaussian(ad::Var head_out);

/// Converts row r of (mean, log_var) into a DiagGaussian.
DiagGaussian row_gaussian(const Matrix& mean, const Matrix& log_var, Index r);

/// Stacks vectors as rows.
Matrix stack_rows(std::span<const Vector> vs);

}  // namespace nplab::models
