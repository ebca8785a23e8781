#include "nplab/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "nplab/errors.hpp"
#include "nplab/taskgen/gp_regression.hpp"

namespace nplab::metrics {
namespace {

double component_log_prob(const PointPredictive& p, Index s, const Vector& y) {
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  double acc = 0.0;
  for (Index k = 0; k < y.size(); ++k) {
    const double lv = p.log_var(s, k);
    const double d = y(k) - p.mean(s, k);
    acc += -half_log_2pi - 0.5 * lv - 0.5 * d * d * std::exp(-lv);
  }
  return acc;
}

void check_aligned(const PredictiveSet& preds, std::span<const Vector> ys) {
  if (preds.size() != ys.size()) throw DimensionError("metrics: predictions and outputs differ in count");
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const PointPredictive& p = preds.points[i];
    if (p.mean.rows() < 1 || p.mean.cols() != ys[i].size() || p.log_var.rows() != p.mean.rows() ||
        p.log_var.cols() != p.mean.cols())
      throw DimensionError("metrics: predictive shape does not match the output");
  }
}

bool in_context(const taskgen::Task& t, const Vector& x) {
  for (const Vector& c : t.x_context)
    if (taskgen::same_point(c, x)) return true;
  return false;
}

}  // namespace

double mixture_log_prob(const PointPredictive& p, const Vector& y) {
  const Index S = p.mean.rows();
  std::vector<double> terms(static_cast<std::size_t>(S));
  double peak = -std::numeric_limits<double>::infinity();
  for (Index s = 0; s < S; ++s) {
    terms[static_cast<std::size_t>(s)] = component_log_prob(p, s, y);
    peak = std::max(peak, terms[static_cast<std::size_t>(s)]);
  }
  if (!std::isfinite(peak)) return peak;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - peak);
  return peak + std::log(acc / static_cast<double>(S));
}

double mixture_log_likelihood(const PredictiveSet& preds, std::span<const Vector> ys) {
  check_aligned(preds, ys);
  if (ys.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) total += mixture_log_prob(preds.points[i], ys[i]);
  return total / static_cast<double>(ys.size());
}

double mixture_cdf(const PointPredictive& p, Index dim, double v) {
  double acc = 0.0;
  for (Index s = 0; s < p.mean.rows(); ++s) {
    const double sd = std::exp(0.5 * p.log_var(s, dim));
    acc += normal_cdf((v - p.mean(s, dim)) / sd);
  }
  return acc / static_cast<double>(p.mean.rows());
}

std::vector<double> default_levels() {
  std::vector<double> l;
  for (int i = 1; i <= 9; ++i) l.push_back(i / 10.0);
  return l;
}

Calibration regression_ece(const PredictiveSet& preds, std::span<const Vector> ys, std::span<const double> levels) {
  check_aligned(preds, ys);
  if (levels.empty()) throw ContractError("regression_ece: no levels");
  for (double p : levels)
    if (!(p > 0.0 && p < 1.0)) throw ContractError("regression_ece: levels must lie in (0, 1)");
  std::vector<double> offsets;  // |F(y) - 0.5| per scalar output
  for (std::size_t i = 0; i < ys.size(); ++i)
    for (Index k = 0; k < ys[i].size(); ++k) offsets.push_back(std::abs(mixture_cdf(preds.points[i], k, ys[i](k)) - 0.5));
  Calibration c;
  if (offsets.empty()) return c;
  std::sort(offsets.begin(), offsets.end());
  double gap = 0.0;
  for (double p : levels) {
    const auto inside = std::upper_bound(offsets.begin(), offsets.end(), p / 2.0) - offsets.begin();
    const double cov = static_cast<double>(inside) / static_cast<double>(offsets.size());
    c.curve.emplace_back(p, cov);
    gap += std::abs(cov - p);
  }
  c.ece = gap / static_cast<double>(levels.size());
  return c;
}

Calibration regression_ece(const PredictiveSet& preds, std::span<const Vector> ys) {
  const std::vector<double> l = default_levels();
  return regression_ece(preds, ys, l);
}

std::string to_string(EvalMask m) {
  switch (m) {
    case EvalMask::target: return "target";
    case EvalMask::context: return "context";
    case EvalMask::all: return "all";
  }
  return "target";
}

EvalMask parse_eval_mask(const std::string& s) {
  if (s == "target") return EvalMask::target;
  if (s == "context") return EvalMask::context;
  if (s == "all") return EvalMask::all;
  throw ConfigError("unknown mask '" + s + "' (expected target, context, all)");
}

Predictor model_predictor(const models::Model& model, Index samples) {
  return [&model, samples](const taskgen::Task& t, std::span<const Vector> x_star, Rng& rng) {
    return models::predict(model, t.x_context, t.y_context, x_star, samples, rng);
  };
}

Predictor exact_gp_predictor() {
  return [](const taskgen::Task& t, std::span<const Vector> x_star, Rng&) {
    const std::vector<DiagGaussian> g = taskgen::gp_posterior_predict(t.kernel, t, x_star);
    PredictiveSet out;
    for (const DiagGaussian& d : g) out.points.push_back({d.mean.transpose(), d.log_var.transpose()});
    return out;
  };
}

EvalReport evaluate_model(const Predictor& predict, std::span<const taskgen::Task> tasks, EvalMask mask, Rng& rng) {
  if (tasks.empty()) throw ContractError("evaluate_model: no tasks");
  PredictiveSet sel;
  std::vector<Vector> sel_y;
  double ll_t = 0.0, ll_c = 0.0;
  EvalReport r;
  r.mask = mask;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const taskgen::Task& t = tasks[i];
    Rng task_rng = rng.split(static_cast<std::uint64_t>(i));
    const PredictiveSet p = predict(t, t.x_target, task_rng);
    if (p.size() != t.target_size()) throw DimensionError("evaluate_model: predictor returned the wrong point count");
    for (std::size_t j = 0; j < t.target_size(); ++j) {
      const bool ctx = in_context(t, t.x_target[j]);
      const double lp = mixture_log_prob(p.points[j], t.y_target[j]);
      if (ctx) {
        ll_c += lp;
        ++r.n_context_points;
      } else {
        ll_t += lp;
        ++r.n_target_points;
      }
      if (mask == EvalMask::all || (mask == EvalMask::context) == ctx) {
        sel.points.push_back(p.points[j]);
        sel_y.push_back(t.y_target[j]);
      }
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.ll_target = r.n_target_points ? ll_t / static_cast<double>(r.n_target_points) : nan;
  r.ll_context = r.n_context_points ? ll_c / static_cast<double>(r.n_context_points) : nan;
  r.n_points = sel_y.size();
  r.ll = mixture_log_likelihood(sel, sel_y);
  if (r.n_points > 0) {
    const Calibration c = regression_ece(sel, sel_y);
    r.ece = c.ece;
    r.calibration_curve = c.curve;
  } else {
    r.ece = nan;
  }
  return r;
}

}  // namespace nplab::metrics
