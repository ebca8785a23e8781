#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nplab/models/model.hpp"
#include "nplab/taskgen/tasks.hpp"

namespace nplab::metrics {

using models::PointPredictive;
using models::PredictiveSet;

/// log of the equal-weight mixture density at y (all output dims jointly).
double mixture_log_prob(const PointPredictive& p, const Vector& y);

/// Mean over points of the mixture log density.
double mixture_log_likelihood(const PredictiveSet& preds, std::span<const Vector> ys);

/// Mixture CDF of output dimension `dim` at value v.
double mixture_cdf(const PointPredictive& p, Index dim, double v);

std::vector<double> default_levels();  // 0.1, 0.2, ..., 0.9

struct Calibration {
  double ece = 0.0;
  std::vector<std::pair<double, double>> curve;  // (level, empirical coverage)
};

/// Centered-interval regression calibration. A value is inside level p when
/// its mixture CDF lies in [0.5 - p/2, 0.5 + p/2]; every output dimension of
/// every point counts once.
Calibration regression_ece(const PredictiveSet& preds, std::span<const Vector> ys,
                           std::span<const double> levels);
Calibration regression_ece(const PredictiveSet& preds, std::span<const Vector> ys);

enum class EvalMask { target, context, all };
std::string to_string(EvalMask m);
EvalMask parse_eval_mask(const std::string& s);

/// Predictive samples for the task's context at the given inputs.
using Predictor = std::function<PredictiveSet(const taskgen::Task&, std::span<const Vector> x_star, Rng&)>;

Predictor model_predictor(const models::Model& model, Index samples);
/// Exact GP on each task's own kernel; a single predictive sample per point.
Predictor exact_gp_predictor();

struct EvalReport {
  EvalMask mask = EvalMask::target;
  double ll = 0.0;          // mean LL over the masked points
  double ll_target = 0.0;   // points not present in the context
  double ll_context = 0.0;  // context points
  double ece = 0.0;         // over the masked points
  std::vector<std::pair<double, double>> calibration_curve;
  std::size_t n_points = 0;          // masked points
  std::size_t n_target_points = 0;
  std::size_t n_context_points = 0;
};

/// Predicts every target of every task (one rng substream per task) and
/// scores the points selected by `mask`. Target points are matched to the
/// context by bitwise x equality.
EvalReport evaluate_model(const Predictor& predict, std::span<const taskgen::Task> tasks, EvalMask mask, Rng& rng);

}  // namespace nplab::metrics
