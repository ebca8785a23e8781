#include "nplab/models/model.hpp"

#include <utility>

#include "nplab/errors.hpp"
#include "nplab/spectral/extremal_sv.hpp"

namespace nplab::models {

void ModelConfig::validate() const {
  dims.validate();
  if (!(leaky_slope > 0.0 && leaky_slope <= 1.0)) throw ConfigError("model.leaky_slope: must lie in (0, 1]");
}

Model::Model(ModelConfig config, ParamsVariant params) : config_(config), params_(std::move(params)) {
  config_.validate();
  const ModelKind held = std::holds_alternative<CnpParams>(params_) ? ModelKind::cnp
                         : std::holds_alternative<NpParams>(params_) ? ModelKind::np
                                                                      : ModelKind::dnp;
  if (held != config_.kind) throw ContractError("Model: parameters do not match the configured kind");
  for (const ConstNet& n : std::as_const(*this).nets()) n.net->validate();
}

Model Model::initialize(const ModelConfig& config, Rng& rng, double sigma_cap) {
  config.validate();
  switch (config.kind) {
    case ModelKind::cnp: return Model(config, make_cnp(config.dims, rng, config.leaky_slope));
    case ModelKind::np: return Model(config, make_np(config.dims, rng, config.leaky_slope));
    case ModelKind::dnp: break;
  }
  Model m(config, make_dnp(config.dims, rng, config.leaky_slope));
  for (const MutableNet& n : m.nets()) {
    if (!n.regularized) continue;
    for (Layer& l : n.net->layers) {
      const double s = spectral::exact_extremal_sv(l.weight).sigma_max;
      if (s > sigma_cap) l.weight *= sigma_cap / s;
    }
  }
  return m;
}

std::vector<MutableNet> Model::nets() {
  return std::visit([](auto& p) { return p.nets(); }, params_);
}

std::vector<ConstNet> Model::nets() const {
  return std::visit([](const auto& p) { return p.nets(); }, params_);
}

std::vector<const MlpParams*> Model::regularized() const {
  std::vector<const MlpParams*> out;
  for (const ConstNet& n : nets())
    if (n.regularized) out.push_back(n.net);
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t total = 0;
  for (const ConstNet& n : nets()) total += n.net->parameter_count();
  return total;
}

namespace {

void fill(LossEvaluation& out, const LossTerms& t) {
  out.loss = t.loss.scalar();
  out.recon = t.recon;
  out.kl_global = t.kl_global;
  out.kl_local = t.kl_local;
  out.bilip = t.bilip;
}

}  // namespace

LossEvaluation loss_and_gradients(const Model& model, std::span<const taskgen::Task> tasks, const LossOptions& opts,
                                  Rng& noise_rng, Rng& solver_rng) {
  const BatchLayout layout = make_training_layout(tasks);
  const ModelDims& d = model.config().dims;
  if (layout.x.cols() != d.x || layout.y.cols() != d.y)
    throw DimensionError("task dimensions do not match the model (x " + std::to_string(layout.x.cols()) + ", y " +
                         std::to_string(layout.y.cols()) + ")");
  ad::Tape tape;
  LossEvaluation out;
  switch (model.kind()) {
    case ModelKind::cnp: {
      const BoundCnp net = bind(tape, std::get<CnpParams>(model.params()));
      const LossTerms t = cnp_loss(net, layout);
      tape.backward(t.loss);
      fill(out, t);
      out.gradients = {gradients(tape, net.encoder), gradients(tape, net.decoder)};
      break;
    }
    case ModelKind::np: {
      const BoundNp net = bind(tape, std::get<NpParams>(model.params()));
      const LossTerms t = np_loss(net, layout, noise_rng.normal_matrix(static_cast<Index>(tasks.size()), d.z));
      tape.backward(t.loss);
      fill(out, t);
      out.gradients = {gradients(tape, net.det_encoder), gradients(tape, net.latent_encoder),
                       gradients(tape, net.latent_head), gradients(tape, net.decoder)};
      break;
    }
    case ModelKind::dnp: {
      const BoundDnp net = bind(tape, std::get<DnpParams>(model.params()));
      const DnpNoise noise = sample_dnp_noise(layout, d.z, noise_rng);
      const LossTerms t = dnp_total_loss(net, layout, model.config().attention, noise, opts.bilip, opts.beta, solver_rng);
      tape.backward(t.loss);
      fill(out, t);
      for (const BoundMlp* n : net.all()) out.gradients.push_back(gradients(tape, *n));
      break;
    }
  }
  return out;
}

PredictiveSet predict(const Model& model, std::span<const Vector> x_context, std::span<const Vector> y_context,
                      std::span<const Vector> x_star, Index samples, Rng& rng) {
  switch (model.kind()) {
    case ModelKind::cnp: return cnp_predict(std::get<CnpParams>(model.params()), x_context, y_context, x_star);
    case ModelKind::np: return np_predict(std::get<NpParams>(model.params()), x_context, y_context, x_star, samples, rng);
    case ModelKind::dnp: break;
  }
  return dnp_predict(std::get<DnpParams>(model.params()), model.config().attention, x_context, y_context, x_star,
                     samples, rng);
}

}  // namespace nplab::models
