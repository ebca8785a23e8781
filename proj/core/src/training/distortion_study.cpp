#include "nplab/training/distortion_study.hpp"

#include <cmath>
#include <numbers>

#include "nplab/training/adam.hpp"

namespace nplab::training {

MoonsData make_two_moons(int n, double noise, Rng& rng) {
  MoonsData d;
  for (int i = 0; i < n; ++i) {
    const bool upper = i % 2 == 0;
    const double t = rng.uniform(0.0, std::numbers::pi);
    Vector x(2);
    if (upper) {
      x << std::cos(t), std::sin(t);
    } else {
      x << 1.0 - std::cos(t), 0.5 - std::sin(t);
    }
    x(0) += noise * rng.normal();
    x(1) += noise * rng.normal();
    d.x.push_back(x);
    d.label.push_back(upper ? 1.0 : 0.0);
  }
  return d;
}

DistortionOutcome run_distortion_study(const DistortionStudyConfig& cfg, double beta, std::uint64_t seed) {
  const RngRoots roots = seed_everything(seed);
  Rng data_rng = roots.data;
  const MoonsData data = make_two_moons(cfg.points, cfg.noise, data_rng);
  Rng init = roots.init;
  const int enc_w[] = {2, cfg.hidden, cfg.hidden, cfg.embed};
  const int head_w[] = {cfg.embed, 1};
  MlpParams encoder = make_mlp(enc_w, init, cfg.slope);
  MlpParams head = make_mlp(head_w, init, cfg.slope);

  const MlpParams* cnets[] = {&encoder, &head};
  MlpParams* nets[] = {&encoder, &head};
  AdamState adam = make_adam_state(cnets);
  AdamConfig ac;
  ac.lr = cfg.lr;
  Rng batch_root = roots.noise.split("batches");
  Rng solver_root = roots.noise.split("solver");

  for (int step = 0; step < cfg.steps; ++step) {
    Rng br = batch_root.split(static_cast<std::uint64_t>(step));
    Matrix xb(cfg.batch, 2), yb(cfg.batch, 1);
    for (int i = 0; i < cfg.batch; ++i) {
      const auto k = static_cast<std::size_t>(br.uniform_int(0, cfg.points - 1));
      xb.row(i) = data.x[k].transpose();
      yb(i, 0) = data.label[k];
    }
    ad::Tape tape;
    const BoundMlp be = bind(tape, encoder);
    const BoundMlp bh = bind(tape, head);
    const ad::Var pred = forward(bh, forward(be, tape.constant(xb)));
    const ad::Var err = ad::sub(pred, tape.constant(yb));
    ad::Var loss = ad::scale(ad::sum(ad::square(err)), 1.0 / cfg.batch);
    if (beta > 0.0) {
      Rng sr = solver_root.split(static_cast<std::uint64_t>(step));
      const BoundMlp* reg[] = {&be};
      loss = ad::add(loss, ad::scale(spectral::bilip_loss(tape, reg, cfg.bilip, sr), beta));
    }
    tape.backward(loss);
    const MlpParams grads[] = {gradients(tape, be), gradients(tape, bh)};
    adam_step(adam, nets, grads, ac);
  }

  Rng pair_rng = roots.data.split("pairs");
  std::vector<std::pair<Vector, Vector>> pairs;
  for (int i = 0; i < cfg.pairs; ++i) {
    const auto a = static_cast<std::size_t>(pair_rng.uniform_int(0, cfg.points - 1));
    const auto b = static_cast<std::size_t>(pair_rng.uniform_int(0, cfg.points - 1));
    pairs.emplace_back(data.x[a], data.x[b]);
  }
  return {spectral::distortion_report(encoder, pairs), encoder};
}

}  // namespace nplab::training
