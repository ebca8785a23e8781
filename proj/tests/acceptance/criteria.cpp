#include "criteria.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "nplab/metrics/metrics.hpp"
#include "nplab/models/dnp.hpp"
#include "nplab/models/model.hpp"
#include "nplab/models/np.hpp"
#include "nplab/spectral/bilipschitz.hpp"
#include "nplab/spectral/extremal_sv.hpp"
#include "nplab/taskgen/kernel.hpp"
#include "nplab/taskgen/tasks.hpp"
#include "nplab/training/distortion_study.hpp"
#include "nplab/training/trainer.hpp"
#include "oracles.hpp"

namespace nplab::acceptance {
namespace {

using models::Model;
using models::ModelKind;
using models::PredictiveSet;

constexpr int kTrainEpochs = 50;
constexpr Index kEvalSamples = 100;

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void progress(const std::string& line) { std::cerr << "  .. " << line << std::endl; }

training::TrainResult train_logged(const training::TrainConfig& cfg, const std::string& label) {
  const auto start = std::chrono::steady_clock::now();
  training::TrainResult r = training::train(cfg, {[&](const training::EpochLog& log, const Model&) {
    if (log.epoch % 10 == 0 || log.epoch == cfg.epochs) {
      const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      progress(fmt("%s epoch %d loss %.4f sigma [%.3f, %.3f] %.0fs", label.c_str(), log.epoch, log.loss,
                   log.sigma_min_worst, log.sigma_max_worst, s));
    }
  }});
  if (r.aborted) progress(label + " aborted: " + r.abort_reason);
  return r;
}

// ---------------------------------------------------------------------------
// Gradient integrity

using GraphFn = std::function<ad::Var(ad::Tape&, std::span<const ad::Var>)>;

double worst_graph_probe(std::vector<Matrix> inputs, const GraphFn& g, int probes, Rng& pick) {
  const auto eval = [&](std::vector<Matrix>* grads) {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const Matrix& m : inputs) vars.push_back(tape.parameter(m));
    const ad::Var root = g(tape, vars);
    if (grads) {
      tape.backward(root);
      for (const ad::Var& v : vars) grads->push_back(tape.grad(v));
    }
    return root.scalar();
  };
  std::vector<Matrix> grads;
  eval(&grads);
  double worst = 0.0;
  for (int i = 0; i < probes; ++i) {
    const auto k = static_cast<std::size_t>(pick.uniform_int(0, static_cast<std::int64_t>(inputs.size()) - 1));
    const Index e = pick.uniform_int(0, inputs[k].size() - 1);
    const auto r = oracle::probe(inputs[k].data()[e], grads[k].data()[e], [&] { return eval(nullptr); });
    worst = std::max(worst, r.rel_error);
  }
  return worst;
}

double worst_loss_probe(ModelKind kind, const models::LossOptions& opts, int probes, std::uint64_t seed) {
  const auto tasks = oracle::small_tasks(4, 10, 6, seed);
  Rng init(seed + 1);
  Model m = Model::initialize(oracle::small_config(kind, 8), init);
  const auto loss = [&](models::LossEvaluation* out) {
    Rng noise(seed + 2), solver(seed + 3);
    models::LossEvaluation e = models::loss_and_gradients(m, tasks, opts, noise, solver);
    if (out) *out = e;
    return e.loss;
  };
  models::LossEvaluation eval;
  loss(&eval);
  Rng pick(seed + 4);
  double worst = 0.0;
  for (int i = 0; i < probes; ++i) {
    const oracle::ParamSlot s = oracle::random_slot(m, pick);
    const auto r = oracle::probe(oracle::entry(m, s), oracle::gradient_entry(eval.gradients, s),
                                 [&] { return loss(nullptr); });
    worst = std::max(worst, r.rel_error);
  }
  return worst;
}

double worst_bilip_probe(const spectral::BiLipConfig& cfg, int probes, std::uint64_t seed) {
  Rng init(seed);
  const Model m = Model::initialize(oracle::small_config(ModelKind::dnp, 8), init);
  std::vector<MlpParams> nets;
  for (const MlpParams* p : m.regularized()) nets.push_back(*p);
  const auto loss = [&](std::vector<MlpParams>* grads) {
    ad::Tape tape;
    std::vector<BoundMlp> bound;
    for (const MlpParams& n : nets) bound.push_back(bind(tape, n));
    std::vector<const BoundMlp*> ptrs;
    for (const BoundMlp& b : bound) ptrs.push_back(&b);
    Rng solver(seed + 1);
    const ad::Var root = spectral::bilip_loss(tape, ptrs, cfg, solver);
    if (grads) {
      tape.backward(root);
      for (const BoundMlp& b : bound) grads->push_back(gradients(tape, b));
    }
    return root.scalar();
  };
  std::vector<MlpParams> grads;
  const double value = loss(&grads);
  if (!(value > 0.0)) return INFINITY;  // the hinge must be active for the check to mean anything
  Rng pick(seed + 2);
  double worst = 0.0;
  for (int i = 0; i < probes; ++i) {
    const auto n = static_cast<std::size_t>(pick.uniform_int(0, static_cast<std::int64_t>(nets.size()) - 1));
    const auto l = static_cast<std::size_t>(pick.uniform_int(0, static_cast<std::int64_t>(nets[n].layers.size()) - 1));
    Matrix& w = nets[n].layers[l].weight;
    const Index e = pick.uniform_int(0, w.size() - 1);
    const auto r = oracle::probe(w.data()[e], grads[n].layers[l].weight.data()[e], [&] { return loss(nullptr); });
    worst = std::max(worst, r.rel_error);
  }
  return worst;
}

Outcome gradient_integrity() {
  constexpr int kProbes = 50;
  constexpr double kTol = 1e-4;
  const auto start = std::chrono::steady_clock::now();
  Rng data(101), pick(102);
  const Matrix y = data.normal_matrix(8, 8);
  const double nll = worst_graph_probe(
      {data.normal_matrix(8, 8), data.normal_matrix(8, 8)},
      [&](ad::Tape&, std::span<const ad::Var> v) { return ad::scale(ad::sum(ad::gaussian_log_prob_rows(y, v[0], v[1])), -1.0); },
      kProbes, pick);
  const double kl = worst_graph_probe(
      {data.normal_matrix(8, 8), data.normal_matrix(8, 8), data.normal_matrix(8, 8), data.normal_matrix(8, 8)},
      [](ad::Tape&, std::span<const ad::Var> v) { return ad::sum(ad::kl_diag_rows(v[0], v[1], v[2], v[3])); },
      kProbes, pick);

  // Narrow band so that both hinges are active on freshly initialized layers.
  spectral::BiLipConfig band;
  band.solver = spectral::SvSolver::exact;
  band.lambda1 = 0.4;
  band.lambda2 = 0.6;
  models::LossOptions elbo_opts;
  elbo_opts.beta = 0.0;
  elbo_opts.bilip = band;
  models::LossOptions total_opts;
  total_opts.beta = 1.0;
  total_opts.bilip = band;
  const double cnp_nll = worst_loss_probe(ModelKind::cnp, elbo_opts, kProbes, 110);
  const double np_elbo = worst_loss_probe(ModelKind::np, elbo_opts, kProbes, 120);
  const double dnp_elbo = worst_loss_probe(ModelKind::dnp, elbo_opts, kProbes, 130);
  const double bilip = worst_bilip_probe(band, kProbes, 140);
  const double total = worst_loss_probe(ModelKind::dnp, total_opts, kProbes, 150);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const double worst = std::max({nll, kl, cnp_nll, np_elbo, dnp_elbo, bilip, total});
  return {worst <= kTol && secs < 60.0,
          fmt("worst rel err: nll %.1e kl %.1e cnp-nll %.1e np-elbo %.1e dnp-elbo %.1e bilip %.1e total %.1e "
              "(tol %.0e), %.1fs (limit 60s)",
              nll, kl, cnp_nll, np_elbo, dnp_elbo, bilip, total, kTol, secs)};
}

// ---------------------------------------------------------------------------
// Spectral solver

Outcome spectral_solver() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(201);
  int ok = 0;
  double worst_max = 0.0, worst_min = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Matrix w = rng.normal_matrix(64, 64) / 8.0;
    const spectral::SpectralBounds e = spectral::exact_extremal_sv(w);
    Rng solver = rng.split(static_cast<std::uint64_t>(t));
    const spectral::SpectralBounds l = spectral::lobpcg_extremal_sv(w, 10, solver);
    const double rmax = std::abs(l.sigma_max - e.sigma_max) / e.sigma_max;
    const double rmin = std::abs(l.sigma_min - e.sigma_min) / e.sigma_min;
    worst_max = std::max(worst_max, rmax);
    worst_min = std::max(worst_min, rmin);
    ok += rmax <= 1e-3 && rmin <= 1e-2 ? 1 : 0;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {ok >= 95 && secs < 60.0,
          fmt("%d/100 within tolerance (need 95); worst rel err max %.1e min %.1e; %.1fs", ok, worst_max, worst_min,
              secs)};
}

// ---------------------------------------------------------------------------
// Shared training runs: NP and DNP at defaults on RBF tasks, five seeds.

struct ComparisonRun {
  std::uint64_t seed = 0;
  double ll_np = 0.0, ll_dnp = 0.0;
  double ece_np = 0.0, ece_dnp = 0.0;
  double sigma_min = 0.0, sigma_max = 0.0;
  bool aborted = false;
  double seconds = 0.0;
};

metrics::EvalReport evaluate_on(const Model& m, const std::vector<taskgen::Task>& tasks) {
  Rng rng(301);
  return metrics::evaluate_model(metrics::model_predictor(m, kEvalSamples), tasks, metrics::EvalMask::target, rng);
}

const std::vector<ComparisonRun>& comparison_runs() {
  static const std::vector<ComparisonRun> runs = [] {
    std::vector<ComparisonRun> out;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto start = std::chrono::steady_clock::now();
      ComparisonRun run;
      run.seed = seed;
      taskgen::TaskGenConfig eval_cfg;
      Rng eval_rng = Rng(300).split(seed);
      const std::vector<taskgen::Task> tasks = taskgen::make_task_batch(eval_cfg, 500, eval_rng);

      training::TrainConfig cfg;
      cfg.epochs = kTrainEpochs;
      cfg.seed = seed;
      cfg.model.kind = ModelKind::np;
      const training::TrainResult np = train_logged(cfg, fmt("np seed %d", static_cast<int>(seed)));
      cfg.model.kind = ModelKind::dnp;
      const training::TrainResult dnp = train_logged(cfg, fmt("dnp seed %d", static_cast<int>(seed)));
      run.aborted = np.aborted || dnp.aborted;

      const metrics::EvalReport rn = evaluate_on(np.model, tasks);
      const metrics::EvalReport rd = evaluate_on(dnp.model, tasks);
      run.ll_np = rn.ll;
      run.ece_np = rn.ece;
      run.ll_dnp = rd.ll;
      run.ece_dnp = rd.ece;
      std::tie(run.sigma_min, run.sigma_max) = training::regularized_sigma_range(dnp.model);
      run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      progress(fmt("seed %d: LL np %.3f dnp %.3f, ECE np %.3f dnp %.3f, dnp sigma [%.3f, %.3f], %.0fs",
                   static_cast<int>(seed), run.ll_np, run.ll_dnp, run.ece_np, run.ece_dnp, run.sigma_min,
                   run.sigma_max, run.seconds));
      out.push_back(run);
    }
    return out;
  }();
  return runs;
}

Outcome bilip_convergence() {
  const auto& runs = comparison_runs();
  bool ok = true;
  std::ostringstream os;
  for (const ComparisonRun& r : runs) {
    const bool in = !r.aborted && r.sigma_min >= 0.05 && r.sigma_max <= 1.05;
    ok = ok && in;
    os << fmt("seed %d [%.3f, %.3f]%s ", static_cast<int>(r.seed), r.sigma_min, r.sigma_max, in ? "" : " OUT");
  }
  double longest = 0.0;
  for (const ComparisonRun& r : runs) longest = std::max(longest, r.seconds);
  os << fmt("(band [0.05, 1.05]; slowest NP+DNP seed %.0fs)", longest);
  return {ok, os.str()};
}

Outcome dnp_vs_np_direction() {
  const auto& runs = comparison_runs();
  int ll_wins = 0, ece_wins = 0;
  double total = 0.0;
  std::ostringstream os;
  for (const ComparisonRun& r : runs) {
    ll_wins += r.ll_dnp > r.ll_np ? 1 : 0;
    ece_wins += r.ece_dnp <= r.ece_np ? 1 : 0;
    total += r.seconds;
    os << fmt("s%d LL %.3f/%.3f ECE %.3f/%.3f; ", static_cast<int>(r.seed), r.ll_dnp, r.ll_np, r.ece_dnp, r.ece_np);
  }
  os << fmt("DNP LL wins %d/5 (need 4), ECE wins %d/5 (need 3), %.0fs (limit 3600s)", ll_wins, ece_wins, total);
  return {ll_wins >= 4 && ece_wins >= 3 && total <= 3600.0, "DNP/NP " + os.str()};
}

// ---------------------------------------------------------------------------
// Distortion study

Outcome distortion_study() {
  const auto start = std::chrono::steady_clock::now();
  training::DistortionStudyConfig cfg;
  std::vector<double> reg, plain;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    reg.push_back(training::run_distortion_study(cfg, 1.0, seed).report.spread);
    plain.push_back(training::run_distortion_study(cfg, 0.0, seed).report.spread);
    progress(fmt("distortion seed %d: bilip %.3f plain %.3f", static_cast<int>(seed), reg.back(), plain.back()));
  }
  const double mr = median(reg), mp = median(plain);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {mr < mp && secs <= 600.0,
          fmt("median spread bilip %.3f vs unregularized %.3f, %.0fs (limit 600s)", mr, mp, secs)};
}

// ---------------------------------------------------------------------------
// Exchangeability

double max_abs_diff(const PredictiveSet& a, const PredictiveSet& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d = std::max(d, (a.points[i].mean - b.points[i].mean).cwiseAbs().maxCoeff());
    d = std::max(d, (a.points[i].log_var - b.points[i].log_var).cwiseAbs().maxCoeff());
  }
  return d;
}

double subset_mismatch(const Model& m, const taskgen::Task& task, const std::vector<Vector>& xs) {
  const Index S = 4, dz = m.config().dims.z;
  Rng rng(402);
  models::PredictNoise noise;
  noise.global = rng.normal_matrix(S, dz);
  noise.local = rng.normal_matrix(static_cast<Index>(xs.size()) * S, dz);
  double worst = 0.0;
  for (std::size_t offset : {std::size_t{0}, xs.size() / 3}) {
    for (std::size_t size : {std::size_t{1}, std::size_t{7}, xs.size() - offset}) {
      const std::vector<Vector> sub(xs.begin() + static_cast<std::ptrdiff_t>(offset),
                                    xs.begin() + static_cast<std::ptrdiff_t>(offset + size));
      PredictiveSet joint, part;
      switch (m.kind()) {
        case ModelKind::cnp: {
          const auto& p = std::get<models::CnpParams>(m.params());
          joint = models::cnp_predict(p, task.x_context, task.y_context, xs);
          part = models::cnp_predict(p, task.x_context, task.y_context, sub);
          break;
        }
        case ModelKind::np: {
          const auto& p = std::get<models::NpParams>(m.params());
          joint = models::np_predict(p, task.x_context, task.y_context, xs, noise.global);
          part = models::np_predict(p, task.x_context, task.y_context, sub, noise.global);
          break;
        }
        case ModelKind::dnp: {
          const auto& p = std::get<models::DnpParams>(m.params());
          joint = models::dnp_predict(p, m.config().attention, task.x_context, task.y_context, xs, noise);
          const models::PredictNoise sn{noise.global,
                                        noise.local.middleRows(static_cast<Index>(offset) * S, static_cast<Index>(size) * S)};
          part = models::dnp_predict(p, m.config().attention, task.x_context, task.y_context, sub, sn);
          break;
        }
      }
      for (std::size_t i = 0; i < size; ++i) {
        const auto& a = part.points[i];
        const auto& b = joint.points[offset + i];
        worst = std::max({worst, (a.mean - b.mean).cwiseAbs().maxCoeff(), (a.log_var - b.log_var).cwiseAbs().maxCoeff()});
      }
    }
  }
  return worst;
}

Outcome exchangeability() {
  const taskgen::Task task = oracle::small_tasks(1, 40, 25, 401).front();
  std::vector<Vector> xs;
  for (int i = 0; i < 60; ++i) xs.push_back(Vector::Constant(1, -4.0 + 8.0 * i / 59.0));
  bool ok = true;
  std::ostringstream os;
  for (ModelKind kind : {ModelKind::cnp, ModelKind::np, ModelKind::dnp}) {
    models::ModelConfig cfg;
    cfg.kind = kind;
    Rng init(403);
    const Model m = Model::initialize(cfg, init);
    Rng ref_rng(404);
    const PredictiveSet ref = models::predict(m, task.x_context, task.y_context, task.x_target, 4, ref_rng);
    Rng shuffler(405);
    double perm = 0.0;
    for (int t = 0; t < 20; ++t) {
      std::vector<Vector> xc = task.x_context, yc = task.y_context;
      for (std::size_t i = xc.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(shuffler.uniform_int(0, static_cast<std::int64_t>(i) - 1));
        std::swap(xc[i - 1], xc[j]);
        std::swap(yc[i - 1], yc[j]);
      }
      Rng rng(404);
      perm = std::max(perm, max_abs_diff(models::predict(m, xc, yc, task.x_target, 4, rng), ref));
    }
    const double sub = subset_mismatch(m, task, xs);
    ok = ok && perm <= 1e-9 && sub == 0.0;
    os << fmt("%s perm %.1e subset %.1e; ", models::to_string(kind).c_str(), perm, sub);
  }
  os << "(perm tol 1e-9, subset exact)";
  return {ok, os.str()};
}

// ---------------------------------------------------------------------------
// Calibration metric

Outcome calibration_metric() {
  metrics::PredictiveSet self;
  std::vector<Vector> ys;
  Rng rng(501);
  for (int i = 0; i < 10000; ++i) {
    const double m = rng.normal(), lv = rng.uniform(-2.0, 1.0);
    models::PointPredictive p{Matrix::Constant(1, 1, m), Matrix::Constant(1, 1, lv)};
    self.points.push_back(p);
    ys.push_back(Vector::Constant(1, m + std::exp(0.5 * lv) * rng.normal()));
  }
  const double ece_self = metrics::regression_ece(self, ys).ece;

  metrics::PredictiveSet off;
  std::vector<Vector> far;
  for (int i = 0; i < 1000; ++i) {
    off.points.push_back({Matrix::Constant(1, 1, rng.normal()), Matrix::Constant(1, 1, -10.0)});
    far.push_back(Vector::Constant(1, off.points.back().mean(0, 0) + (i % 2 == 0 ? 5.0 : -5.0)));
  }
  const double ece_off = metrics::regression_ece(off, far).ece;

  taskgen::TaskGenConfig cfg;
  Rng task_rng(502);
  const auto tasks = taskgen::make_task_batch(cfg, 500, task_rng);
  Rng eval_rng(503);
  const double ece_gp =
      metrics::evaluate_model(metrics::exact_gp_predictor(), tasks, metrics::EvalMask::target, eval_rng).ece;

  const bool ok = ece_self <= 0.02 && std::abs(ece_off - 0.5) <= 1e-6 && ece_gp <= 0.05;
  return {ok, fmt("self-consistent %.4f (<= 0.02), degenerate %.7f (0.5 +- 1e-6), exact GP %.4f (<= 0.05)", ece_self,
                  ece_off, ece_gp)};
}

// ---------------------------------------------------------------------------
// GP sampler

Outcome gp_sampler() {
  const std::vector<Vector> xs = {Vector::Constant(1, -1.7), Vector::Constant(1, -0.6), Vector::Constant(1, 0.0),
                                  Vector::Constant(1, 0.45), Vector::Constant(1, 1.9)};
  std::vector<taskgen::KernelSpec> kernels(3);
  kernels[0] = {taskgen::KernelFamily::rbf, 0.8, 0.7, 1.0, 0.0};
  kernels[1] = {taskgen::KernelFamily::matern52, 0.6, 1.0, 1.0, 0.0};
  kernels[2] = {taskgen::KernelFamily::periodic, 0.9, 0.5, 1.2, 0.0};
  constexpr int kDraws = 10000;
  bool ok = true;
  std::ostringstream os;
  Rng root(601);
  for (std::size_t k = 0; k < kernels.size(); ++k) {
    const Matrix K = taskgen::kernel_matrix(kernels[k], xs);
    Matrix sum = Matrix::Zero(5, 5);
    Rng rng = root.split(k);
    for (int d = 0; d < kDraws; ++d) {
      const std::vector<double> f = taskgen::sample_gp_function(kernels[k], xs, rng);
      const Eigen::Map<const Vector> v(f.data(), 5);
      sum.noalias() += v * v.transpose();
    }
    const Matrix cov = sum / kDraws;
    int within = 0, total = 0;
    double worst = 0.0;
    for (Index i = 0; i < 5; ++i) {
      for (Index j = i; j < 5; ++j) {
        // The mean is known to be zero, so var(f_i f_j) = K_ii K_jj + K_ij^2.
        const double se = std::sqrt((K(i, i) * K(j, j) + K(i, j) * K(i, j)) / kDraws);
        const double z = std::abs(cov(i, j) - K(i, j)) / se;
        worst = std::max(worst, z);
        within += z <= 3.0 ? 1 : 0;
        ++total;
      }
    }
    ok = ok && within == total;
    os << fmt("%s %d/%d (max %.2f SE); ", taskgen::to_string(kernels[k].family).c_str(), within, total, worst);
  }
  os << "all entries must lie within 3 SE";
  return {ok, os.str()};
}

// ---------------------------------------------------------------------------
// OOD uncertainty

Outcome ood_uncertainty() {
  const auto start = std::chrono::steady_clock::now();
  std::vector<Vector> grid;
  for (int i = 0; i < 200; ++i) grid.push_back(Vector::Constant(1, -4.0 + 8.0 * i / 199.0));
  std::vector<double> ratios;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    training::TrainConfig cfg;
    cfg.epochs = kTrainEpochs;
    cfg.seed = seed;
    cfg.model.kind = ModelKind::dnp;
    cfg.model.attention.normalize = false;
    const training::TrainResult r = train_logged(cfg, fmt("ood dnp seed %d", static_cast<int>(seed)));
    taskgen::TaskGenConfig data;
    Rng task_rng = Rng(700).split(seed);
    const auto tasks = taskgen::make_task_batch(data, 50, task_rng);
    Rng rng(701);
    double in_sum = 0.0, out_sum = 0.0;
    int in_n = 0, out_n = 0;
    for (const taskgen::Task& t : tasks) {
      const PredictiveSet p = models::predict(r.model, t.x_context, t.y_context, grid, kEvalSamples, rng);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const double ax = std::abs(grid[i](0));
        const double sd = std::exp(0.5 * models::moment_match(p.points[i]).log_var(0));
        if (ax <= 2.0) {
          in_sum += sd;
          ++in_n;
        } else if (ax >= 3.0) {
          out_sum += sd;
          ++out_n;
        }
      }
    }
    ratios.push_back((out_sum / out_n) / (in_sum / in_n));
    progress(fmt("ood seed %d: sd in %.4f out %.4f ratio %.3f", static_cast<int>(seed), in_sum / in_n,
                 out_sum / out_n, ratios.back()));
  }
  const double med = median(ratios);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {med >= 1.5, fmt("std ratio |x| in [3,4] vs |x| <= 2: %.3f %.3f %.3f, median %.3f (need >= 1.5), %.0fs",
                          ratios[0], ratios[1], ratios[2], med, secs)};
}

// ---------------------------------------------------------------------------
// Complexity

Outcome complexity() {
  models::ModelConfig cfg;
  cfg.kind = ModelKind::dnp;
  Rng init(801);
  const Model m = Model::initialize(cfg, init);
  std::vector<Vector> xs;
  for (int i = 0; i < 500; ++i) xs.push_back(Vector::Constant(1, -4.0 + 8.0 * i / 499.0));
  const auto context = [](int M, Rng& rng, std::vector<Vector>& xc, std::vector<Vector>& yc) {
    for (int i = 0; i < M; ++i) {
      xc.push_back(Vector::Constant(1, rng.uniform(-2.0, 2.0)));
      yc.push_back(Vector::Constant(1, rng.normal()));
    }
  };
  const auto timed = [&](int M) {
    Rng data(802);
    std::vector<Vector> xc, yc;
    context(M, data, xc, yc);
    std::vector<double> t;
    Rng warm(803);
    models::predict(m, xc, yc, xs, 16, warm);
    for (int rep = 0; rep < 5; ++rep) {
      Rng rng(804);
      const auto s = std::chrono::steady_clock::now();
      models::predict(m, xc, yc, xs, 16, rng);
      t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - s).count());
    }
    return median(t);
  };
  const double t50 = timed(50), t100 = timed(100);
  const double ratio = t100 / t50;
  return {ratio <= 2.5, fmt("N=500 S=16: M=50 %.1f ms, M=100 %.1f ms, ratio %.2f (limit 2.5)", 1e3 * t50, 1e3 * t100,
                            ratio)};
}

}  // namespace

std::vector<Criterion> all_criteria() {
  return {
      {"gradient-integrity", gradient_integrity},
      {"spectral-solver", spectral_solver},
      {"bilip-convergence", bilip_convergence},
      {"distortion-spread", distortion_study},
      {"exchangeability", exchangeability},
      {"calibration-metric", calibration_metric},
      {"gp-sampler", gp_sampler},
      {"dnp-vs-np-direction", dnp_vs_np_direction},
      {"ood-uncertainty", ood_uncertainty},
      {"complexity", complexity},
  };
}

}  // namespace nplab::acceptance
