#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "nplab/errors.hpp"
#include "nplab/training/adam.hpp"
#include "nplab/training/distortion_study.hpp"
#include "nplab/training/trainer.hpp"
#include "oracles.hpp"

using namespace nplab;
using namespace nplab::training;

namespace {

MlpParams scalar_param(double w) {
  MlpParams p;
  p.layers.push_back({Matrix::Constant(1, 1, w), Vector::Zero(1), Activation::identity()});
  return p;
}

TrainConfig tiny_config(models::ModelKind kind) {
  TrainConfig cfg;
  cfg.model = oracle::small_config(kind, 8);
  cfg.epochs = 2;
  cfg.batches_per_epoch = 3;
  cfg.batch_size = 4;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST(Adam, FirstStepMovesByLearningRate) {
  MlpParams p = scalar_param(1.0);
  MlpParams g = scalar_param(-0.37);
  g.layers[0].bias[0] = 2.5;
  const MlpParams* cp[] = {&p};
  AdamState s = make_adam_state(cp);
  MlpParams* mp[] = {&p};
  AdamConfig cfg;
  cfg.lr = 0.01;
  const MlpParams grads[] = {g};
  const StepReport r = adam_step(s, mp, grads, cfg);
  EXPECT_TRUE(r.applied);
  EXPECT_NEAR(p.layers[0].weight(0, 0), 1.0 + 0.01, 1e-9);
  EXPECT_NEAR(p.layers[0].bias[0], -0.01, 1e-9);
  EXPECT_EQ(s.step, 1);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  MlpParams p = scalar_param(0.4);
  const MlpParams* cp[] = {&p};
  AdamState s = make_adam_state(cp);
  MlpParams* mp[] = {&p};
  const MlpParams grads[] = {zeros_like(p)};
  for (int i = 0; i < 5; ++i) adam_step(s, mp, grads, {});
  EXPECT_EQ(p.layers[0].weight(0, 0), 0.4);
}

TEST(Adam, ConvergesOnQuadratic) {
  MlpParams p = scalar_param(0.0);
  const MlpParams* cp[] = {&p};
  AdamState s = make_adam_state(cp);
  MlpParams* mp[] = {&p};
  AdamConfig cfg;
  cfg.lr = 0.1;
  for (int i = 0; i < 1000; ++i) {
    MlpParams g = zeros_like(p);
    g.layers[0].weight(0, 0) = 2.0 * (p.layers[0].weight(0, 0) - 3.0);
    const MlpParams grads[] = {g};
    adam_step(s, mp, grads, cfg);
  }
  EXPECT_LE(std::abs(p.layers[0].weight(0, 0) - 3.0), 0.01);
}

TEST(Adam, NonFiniteGradientIsRejectedAndLargeOnesClipped) {
  MlpParams p = scalar_param(1.0);
  const MlpParams* cp[] = {&p};
  AdamState s = make_adam_state(cp);
  MlpParams* mp[] = {&p};
  MlpParams bad = scalar_param(std::numeric_limits<double>::quiet_NaN());
  const MlpParams grads[] = {bad};
  const StepReport r = adam_step(s, mp, grads, {});
  EXPECT_FALSE(r.applied);
  EXPECT_EQ(p.layers[0].weight(0, 0), 1.0);
  EXPECT_EQ(s.step, 0);
  const MlpParams big[] = {scalar_param(1e3)};
  const StepReport c = adam_step(s, mp, big, {});
  EXPECT_TRUE(c.clipped);
  EXPECT_DOUBLE_EQ(c.grad_norm, 1e3);
}

TEST(TrainConfig, ValidationNamesFields) {
  TrainConfig cfg;
  cfg.lr = -1.0;
  cfg.epochs = -2;
  cfg.bilip.lambda1 = 2.0;
  try {
    cfg.validate();
    FAIL();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("lr"), std::string::npos);
    EXPECT_NE(msg.find("epochs"), std::string::npos);
    EXPECT_NE(msg.find("lambda"), std::string::npos);
  }
  const TrainConfig defaults;
  EXPECT_EQ(defaults.lr, 1e-3);
  EXPECT_EQ(defaults.epochs, 200);
  EXPECT_EQ(defaults.batch_size, 50);
  EXPECT_EQ(defaults.beta, 1.0);
  EXPECT_EQ(defaults.bilip.lambda1, 0.1);
  EXPECT_EQ(defaults.bilip.lambda2, 1.0);
  EXPECT_EQ(defaults.model.dims.h, 64);
  EXPECT_EQ(defaults.model.dims.z, 64);
  EXPECT_EQ(defaults.model.dims.u, 64);
}

TEST(Train, ZeroEpochsReturnsInitialModel) {
  TrainConfig cfg = tiny_config(models::ModelKind::dnp);
  cfg.epochs = 0;
  const TrainResult r = train(cfg);
  EXPECT_TRUE(r.log.empty());
  EXPECT_FALSE(r.aborted);
  Rng init = seed_everything(cfg.seed).init;
  const models::Model fresh = models::Model::initialize(cfg.model, init, cfg.bilip.lambda2);
  EXPECT_EQ(std::get<models::DnpParams>(r.model.params()).decoder.layers[1].weight,
            std::get<models::DnpParams>(fresh.params()).decoder.layers[1].weight);
}

TEST(Train, DeterministicLogsAndParameters) {
  for (models::ModelKind kind : {models::ModelKind::cnp, models::ModelKind::np, models::ModelKind::dnp}) {
    const TrainConfig cfg = tiny_config(kind);
    const TrainResult a = train(cfg), b = train(cfg);
    std::ostringstream la, lb;
    write_training_log_csv(la, a.log, cfg.batches_per_epoch);
    write_training_log_csv(lb, b.log, cfg.batches_per_epoch);
    EXPECT_EQ(la.str(), lb.str());
    const auto na = a.model.nets(), nb = b.model.nets();
    for (std::size_t i = 0; i < na.size(); ++i)
      for (std::size_t l = 0; l < na[i].net->layers.size(); ++l)
        EXPECT_EQ(na[i].net->layers[l].weight, nb[i].net->layers[l].weight);
    EXPECT_EQ(a.log.size(), 2u);
    if (kind != models::ModelKind::dnp) {
      EXPECT_EQ(a.log.back().bilip, 0.0);
      EXPECT_TRUE(std::isnan(a.log.back().sigma_max_worst));
    }
    TrainConfig other = cfg;
    other.seed = 6;
    EXPECT_NE(train(other).log.back().loss, a.log.back().loss);
  }
}

TEST(Train, DivergenceAbortsWithLastFiniteParameters) {
  TrainConfig cfg = tiny_config(models::ModelKind::cnp);
  cfg.lr = 1e200;
  cfg.clip_norm = 0.0;
  cfg.epochs = 20;
  int epochs_seen = 0;
  const TrainResult r = train(cfg, {[&](const EpochLog&, const models::Model&) { ++epochs_seen; }});
  ASSERT_TRUE(r.aborted) << "no divergence within the budget";
  EXPECT_FALSE(r.abort_reason.empty());
  for (const models::ConstNet& n : r.model.nets())
    for (const Layer& l : n.net->layers) EXPECT_TRUE(l.weight.allFinite());
  EXPECT_EQ(static_cast<int>(r.log.size()), epochs_seen);
}

TEST(Train, LogCsvColumns) {
  std::ostringstream os;
  write_training_log_csv(os, {EpochLog{}}, 100);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')),
            "schema_version,epoch,loss,recon,kl_global,kl_local,bilip,sigma_min_worst,sigma_max_worst,"
            "rejected_steps,clipped_steps,batches_per_epoch");
}

TEST(DistortionStudy, MoonsAndDeterminism) {
  Rng rng(1);
  const MoonsData d = make_two_moons(200, 0.1, rng);
  ASSERT_EQ(d.x.size(), 200u);
  int ones = 0;
  for (double l : d.label) ones += l == 1.0 ? 1 : 0;
  EXPECT_EQ(ones, 100);
  DistortionStudyConfig cfg;
  cfg.steps = 30;
  cfg.pairs = 50;
  const DistortionOutcome a = run_distortion_study(cfg, 1.0, 3), b = run_distortion_study(cfg, 1.0, 3);
  EXPECT_EQ(a.report.ratios, b.report.ratios);
  EXPECT_EQ(a.report.ratios.size() + a.report.skipped, 50u);
}
