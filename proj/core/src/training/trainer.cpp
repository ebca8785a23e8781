#include "nplab/training/trainer.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "nplab/errors.hpp"
#include "nplab/json_fields.hpp"
#include "nplab/metrics/report_io.hpp"
#include "nplab/models/checkpoint.hpp"
#include "nplab/taskgen/task_io.hpp"

namespace nplab::training {

using nlohmann::json;

void TrainConfig::validate() const {
  std::string errors;
  const auto note = [&errors](const std::string& msg) { errors += (errors.empty() ? "" : "; ") + msg; };
  const auto guard = [&](auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      note(e.what());
    }
  };
  guard([&] { model.validate(); });
  guard([&] { data.validate(); });
  guard([&] { bilip.validate(); });
  if (!(lr > 0.0)) note("lr: must be > 0");
  if (epochs < 0) note("epochs: must be >= 0");
  if (batch_size < 1) note("batch_size: must be >= 1");
  if (batches_per_epoch < 1) note("batches_per_epoch: must be >= 1");
  if (!(beta >= 0.0)) note("beta: must be >= 0");
  if (eval_every < 0) note("eval_every: must be >= 0");
  if (model.dims.x != data.x_dim) note("model.dims.x: must equal data.x_dim");
  if (model.dims.y != 1) note("model.dims.y: generated tasks have one output");
  if (!errors.empty()) throw ConfigError(errors);
}

AdamConfig TrainConfig::adam() const {
  AdamConfig a;
  a.lr = lr;
  a.clip_norm = clip_norm;
  return a;
}

json to_json(const TrainConfig& c) {
  return {{"model", models::to_json(c.model)},
          {"data", taskgen::to_json(c.data)},
          {"lr", c.lr},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"batches_per_epoch", c.batches_per_epoch},
          {"beta", c.beta},
          {"lambda1", c.bilip.lambda1},
          {"lambda2", c.bilip.lambda2},
          {"sv_solver", c.bilip.solver == spectral::SvSolver::exact ? "exact" : "lobpcg"},
          {"lobpcg_iterations", c.bilip.iterations},
          {"clip_norm", c.clip_norm},
          {"eval_every", c.eval_every},
          {"seed", c.seed}};
}

void update_from_json(TrainConfig& c, const json& j) {
  reject_unknown_keys(j,
                      {"model", "data", "lr", "epochs", "batch_size", "batches_per_epoch", "beta", "lambda1", "lambda2",
                       "sv_solver", "lobpcg_iterations", "clip_norm", "eval_every", "seed"},
                      "train");
  if (j.contains("model")) models::update_from_json(c.model, j.at("model"), "model");
  if (j.contains("data")) taskgen::update_from_json(c.data, j.at("data"), "data");
  read_field(j, "lr", c.lr, "train");
  read_field(j, "epochs", c.epochs, "train");
  read_field(j, "batch_size", c.batch_size, "train");
  read_field(j, "batches_per_epoch", c.batches_per_epoch, "train");
  read_field(j, "beta", c.beta, "train");
  read_field(j, "lambda1", c.bilip.lambda1, "train");
  read_field(j, "lambda2", c.bilip.lambda2, "train");
  read_field(j, "lobpcg_iterations", c.bilip.iterations, "train");
  read_field(j, "clip_norm", c.clip_norm, "train");
  read_field(j, "eval_every", c.eval_every, "train");
  read_field(j, "seed", c.seed, "train");
  if (j.contains("sv_solver")) {
    std::string s;
    read_field(j, "sv_solver", s, "train");
    if (s == "exact") {
      c.bilip.solver = spectral::SvSolver::exact;
    } else if (s == "lobpcg") {
      c.bilip.solver = spectral::SvSolver::lobpcg;
    } else {
      throw ConfigError("train.sv_solver: expected exact or lobpcg");
    }
  }
}

std::pair<double, double> regularized_sigma_range(const models::Model& model) {
  const std::vector<const MlpParams*> reg = model.regularized();
  if (reg.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan};
  }
  const spectral::LayerSpectrumSummary s = spectral::summarize_spectrum(reg);
  return {s.sigma_min_worst, s.sigma_max_worst};
}

TrainResult train(const TrainConfig& cfg, const TrainCallbacks& callbacks) {
  cfg.validate();
  const RngRoots roots = seed_everything(cfg.seed);
  Rng init = roots.init;
  TrainResult result{models::Model::initialize(cfg.model, init, cfg.bilip.lambda2), {}, false, {}};
  models::Model& model = result.model;

  std::vector<const MlpParams*> const_nets;
  std::vector<MlpParams*> nets;
  for (const models::MutableNet& n : model.nets()) {
    nets.push_back(n.net);
    const_nets.push_back(n.net);
  }
  AdamState adam = make_adam_state(const_nets);
  const AdamConfig adam_cfg = cfg.adam();
  models::LossOptions opts;
  opts.beta = cfg.model.kind == models::ModelKind::dnp ? cfg.beta : 0.0;
  opts.bilip = cfg.bilip;
  const Rng solver_root = roots.noise.split("solver");
  const Rng latent_root = roots.noise.split("latent");
  // Parameters of the most recent step whose loss was finite.
  models::ParamsVariant last_good = model.params();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochLog log;
    log.epoch = epoch;
    for (int b = 0; b < cfg.batches_per_epoch; ++b) {
      const auto step = static_cast<std::uint64_t>(epoch - 1) * static_cast<std::uint64_t>(cfg.batches_per_epoch) +
                        static_cast<std::uint64_t>(b);
      Rng data_rng = roots.data.split(step);
      Rng noise_rng = latent_root.split(step);
      Rng solver_rng = solver_root.split(step);
      const std::vector<taskgen::Task> tasks = taskgen::make_task_batch(cfg.data, cfg.batch_size, data_rng);
      const models::LossEvaluation ev = models::loss_and_gradients(model, tasks, opts, noise_rng, solver_rng);
      if (!std::isfinite(ev.loss)) {
        model.params() = std::move(last_good);
        result.aborted = true;
        result.abort_reason = "non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b);
        return result;
      }
      last_good = model.params();
      const StepReport sr = adam_step(adam, nets, ev.gradients, adam_cfg);
      if (!sr.applied) ++log.rejected_steps;
      if (sr.clipped) ++log.clipped_steps;
      log.loss += ev.loss;
      log.recon += ev.recon;
      log.kl_global += ev.kl_global;
      log.kl_local += ev.kl_local;
      log.bilip += ev.bilip;
    }
    const double n = static_cast<double>(cfg.batches_per_epoch);
    log.loss /= n;
    log.recon /= n;
    log.kl_global /= n;
    log.kl_local /= n;
    log.bilip /= n;
    std::tie(log.sigma_min_worst, log.sigma_max_worst) = regularized_sigma_range(model);
    result.log.push_back(log);
    if (callbacks.on_epoch) callbacks.on_epoch(log, model);
  }
  return result;
}

void write_training_log_csv(std::ostream& os, const std::vector<EpochLog>& log, int batches_per_epoch) {
  using metrics::format_double;
  metrics::CsvWriter w(os, {"epoch", "loss", "recon", "kl_global", "kl_local", "bilip", "sigma_min_worst",
                            "sigma_max_worst", "rejected_steps", "clipped_steps", "batches_per_epoch"});
  for (const EpochLog& e : log)
    w.row({std::to_string(e.epoch), format_double(e.loss), format_double(e.recon), format_double(e.kl_global),
           format_double(e.kl_local), format_double(e.bilip), format_double(e.sigma_min_worst),
           format_double(e.sigma_max_worst), std::to_string(e.rejected_steps), std::to_string(e.clipped_steps),
           std::to_string(batches_per_epoch)});
}

}  // namespace nplab::training
