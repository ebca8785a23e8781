#include "nplab/taskgen/gp_regression.hpp"

#include <algorithm>
#include <cmath>

#include "nplab/errors.hpp"
#include "nplab/numerics/linalg.hpp"

namespace nplab::taskgen {

std::vector<DiagGaussian> gp_posterior_predict(const KernelSpec& k, const Task& task,
                                               std::span<const Vector> x_star) {
  if (task.x_context.empty()) throw ContractError("gp_posterior_predict: empty context");
  const Index m = static_cast<Index>(task.x_context.size());
  const Index dy = task.y_context.front().size();

  Matrix kcc = kernel_matrix(k, task.x_context);
  kcc.diagonal().array() += k.noise * k.noise;
  const Matrix lower = cholesky(kcc);

  Matrix y(m, dy);
  for (Index i = 0; i < m; ++i) y.row(i) = task.y_context[static_cast<std::size_t>(i)].transpose();
  const Matrix alpha = cholesky_solve(lower, y);

  const Matrix ksc = kernel_matrix(k, x_star, task.x_context);  // n* x m
  const Matrix v = lower.triangularView<Eigen::Lower>().solve(ksc.transpose());  // m x n*

  std::vector<DiagGaussian> out;
  out.reserve(x_star.size());
  for (std::size_t i = 0; i < x_star.size(); ++i) {
    const Index c = static_cast<Index>(i);
    const double prior = kernel_eval(k, x_star[i], x_star[i]);
    const double latent_var = std::max(prior - v.col(c).squaredNorm(), 0.0);
    const double var = latent_var + k.noise * k.noise;
    DiagGaussian g;
    g.mean = (ksc.row(c) * alpha).transpose();
    g.log_var = Vector::Constant(dy, std::log(std::max(var, 1e-300)));
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace nplab::taskgen
