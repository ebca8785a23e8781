#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "nplab/errors.hpp"
#include "nplab/metrics/metrics.hpp"
#include "nplab/metrics/report_io.hpp"
#include "nplab/taskgen/tasks.hpp"
#include "oracles.hpp"

using namespace nplab;
using namespace nplab::metrics;

namespace {

PointPredictive point(std::initializer_list<double> means, std::initializer_list<double> log_vars) {
  PointPredictive p;
  p.mean.resize(static_cast<Index>(means.size()), 1);
  p.log_var.resize(static_cast<Index>(log_vars.size()), 1);
  Index i = 0;
  for (double m : means) p.mean(i++, 0) = m;
  i = 0;
  for (double l : log_vars) p.log_var(i++, 0) = l;
  return p;
}

// Self-consistent predictions: each y is drawn from its own predictive.
void self_consistent(int n, std::uint64_t seed, PredictiveSet& preds, std::vector<Vector>& ys) {
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    const double m = rng.normal(), lv = rng.uniform(-2, 1);
    preds.points.push_back(point({m}, {lv}));
    ys.push_back(Vector::Constant(1, m + std::exp(0.5 * lv) * rng.normal()));
  }
}

}  // namespace

TEST(MixtureLl, ClosedForms) {
  PredictiveSet p;
  p.points.push_back(point({0.4}, {0.0}));
  const std::vector<Vector> y = {Vector::Constant(1, 0.4)};
  EXPECT_NEAR(mixture_log_likelihood(p, y), -0.918938533204673, 1e-12);
  PredictiveSet twice;
  twice.points.push_back(point({0.4, 0.4}, {0.0, 0.0}));
  EXPECT_NEAR(mixture_log_likelihood(twice, y), -0.918938533204673, 1e-12);
}

TEST(MixtureLl, MatchesDirectSummation) {
  Rng rng(1);
  PredictiveSet p;
  std::vector<Vector> ys;
  long double ref = 0.0L;
  for (int i = 0; i < 20; ++i) {
    PointPredictive pt;
    pt.mean = rng.normal_matrix(6, 2);
    pt.log_var = rng.normal_matrix(6, 2);
    const Vector y = rng.normal_vector(2);
    long double dens = 0.0L;
    for (Index s = 0; s < 6; ++s) {
      long double d = 1.0L;
      for (Index k = 0; k < 2; ++k) {
        const long double var = std::exp(static_cast<long double>(pt.log_var(s, k)));
        const long double r = y[k] - pt.mean(s, k);
        d *= std::exp(-0.5L * r * r / var) / std::sqrt(2.0L * std::numbers::pi_v<long double> * var);
      }
      dens += d / 6.0L;
    }
    ref += std::log(dens);
    p.points.push_back(pt);
    ys.push_back(y);
  }
  EXPECT_NEAR(mixture_log_likelihood(p, ys), static_cast<double>(ref / 20.0L), 1e-12);
}

TEST(MixtureLl, NeverNanForExtremeValues) {
  PredictiveSet p;
  p.points.push_back(point({0.0, 1.0}, {-10.0, -10.0}));
  const std::vector<Vector> far = {Vector::Constant(1, 1e4)};
  const double ll = mixture_log_likelihood(p, far);
  EXPECT_FALSE(std::isnan(ll));
  EXPECT_TRUE(std::isfinite(ll));
}

TEST(Ece, SelfConsistentPredictionsAreCalibrated) {
  PredictiveSet p;
  std::vector<Vector> ys;
  self_consistent(10000, 2, p, ys);
  const Calibration c = regression_ece(p, ys);
  EXPECT_LE(c.ece, 0.02);
  ASSERT_EQ(c.curve.size(), 9u);
  for (std::size_t i = 1; i < c.curve.size(); ++i) EXPECT_GE(c.curve[i].second, c.curve[i - 1].second);
}

TEST(Ece, DegenerateCases) {
  PredictiveSet off;
  std::vector<Vector> ys;
  for (int i = 0; i < 50; ++i) {
    off.points.push_back(point({static_cast<double>(i)}, {-10.0}));
    ys.push_back(Vector::Constant(1, i + 5.0));
  }
  EXPECT_NEAR(regression_ece(off, ys).ece, 0.5, 1e-6);

  PredictiveSet at;
  at.points.push_back(point({0.3}, {0.0}));
  const std::vector<Vector> y = {Vector::Constant(1, 0.3)};
  const Calibration c = regression_ece(at, y);
  EXPECT_NEAR(c.ece, 0.5, 1e-12);
  for (const auto& [level, cov] : c.curve) EXPECT_EQ(cov, 1.0);
}

TEST(Ece, InvariantToShuffling) {
  PredictiveSet p;
  std::vector<Vector> ys;
  self_consistent(500, 3, p, ys);
  const double before = regression_ece(p, ys).ece;
  std::reverse(p.points.begin(), p.points.end());
  std::reverse(ys.begin(), ys.end());
  EXPECT_EQ(regression_ece(p, ys).ece, before);
}

TEST(Ece, MixtureCdf) {
  const PointPredictive p = point({-1.0, 1.0}, {0.0, 0.0});
  EXPECT_NEAR(mixture_cdf(p, 0, 0.0), 0.5, 1e-15);
  EXPECT_NEAR(mixture_cdf(p, 0, 1.0), 0.5 * (normal_cdf(2.0) + 0.5), 1e-15);
}

TEST(Evaluate, MasksPartitionPoints) {
  taskgen::TaskGenConfig cfg;
  Rng rng(4);
  const auto tasks = taskgen::make_task_batch(cfg, 20, rng);
  const Predictor gp = exact_gp_predictor();
  Rng r1(5), r2(5), r3(5);
  const EvalReport t = evaluate_model(gp, tasks, EvalMask::target, r1);
  const EvalReport c = evaluate_model(gp, tasks, EvalMask::context, r2);
  const EvalReport a = evaluate_model(gp, tasks, EvalMask::all, r3);
  EXPECT_EQ(t.n_points + c.n_points, a.n_points);
  EXPECT_EQ(a.n_points, 20u * 50u);
  EXPECT_NEAR(a.ll, (t.ll * t.n_points + c.ll * c.n_points) / a.n_points, 1e-12);
  EXPECT_DOUBLE_EQ(t.ll, a.ll_target);
  Rng r4(5);
  const EvalReport again = evaluate_model(gp, tasks, EvalMask::target, r4);
  EXPECT_EQ(again.ll, t.ll);
  EXPECT_EQ(again.ece, t.ece);
  EXPECT_THROW(evaluate_model(gp, {}, EvalMask::all, r4), ContractError);
  EXPECT_EQ(parse_eval_mask(to_string(EvalMask::context)), EvalMask::context);
}

TEST(Evaluate, ExactGpIsCalibratedOnItsOwnKernel) {
  taskgen::TaskGenConfig cfg;
  Rng rng(6);
  const auto tasks = taskgen::make_task_batch(cfg, 500, rng);
  Rng eval_rng(7);
  const EvalReport r = evaluate_model(exact_gp_predictor(), tasks, EvalMask::target, eval_rng);
  EXPECT_LE(r.ece, 0.05);
  // Expected log density of a well-specified Gaussian: -0.5 log(2 pi var) - 0.5.
  double expected = 0.0;
  std::size_t n = 0;
  for (const auto& t : tasks) {
    const auto pred = exact_gp_predictor()(t, t.x_target, eval_rng);
    for (std::size_t j = 0; j < t.target_size(); ++j) {
      bool ctx = false;
      for (const Vector& xc : t.x_context) ctx = ctx || taskgen::same_point(xc, t.x_target[j]);
      if (ctx) continue;
      expected += -0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * pred.points[j].log_var(0, 0) - 0.5;
      ++n;
    }
  }
  EXPECT_NEAR(r.ll, expected / static_cast<double>(n), 0.1);
}

TEST(ReportIo, CsvHasSchemaColumnAndRoundTrippableNumbers) {
  EXPECT_EQ(std::stod(format_double(0.1)), 0.1);
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
  EvalReport r;
  r.ll = 0.5;
  r.calibration_curve = {{0.1, 0.12}, {0.2, 0.19}};
  std::ostringstream m, c;
  write_metrics_csv(m, {"dnp", "rbf", 3, 100}, {r});
  write_calibration_csv(c, {"dnp", "rbf", 3, 100}, {r});
  EXPECT_EQ(m.str().rfind("schema_version,", 0), 0u);
  EXPECT_EQ(c.str().rfind("schema_version,", 0), 0u);
  EXPECT_NE(m.str().find("\n1,dnp,rbf"), std::string::npos);
  const std::string cal = c.str();
  EXPECT_EQ(std::count(cal.begin(), cal.end(), '\n'), 3);
}
