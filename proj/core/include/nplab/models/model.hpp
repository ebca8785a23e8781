#pragma once

#include <span>
#include <variant>
#include <vector>

#include "nplab/models/np.hpp"

namespace nplab::models {

struct ModelConfig {
  ModelKind kind = ModelKind::dnp;
  ModelDims dims;
  AttentionConfig attention;
  double leaky_slope = kDefaultLeakySlope;

  void validate() const;
};

using ParamsVariant = std::variant<CnpParams, NpParams, DnpParams>;

/// A configured model of any family.
class Model {
 public:
  Model(ModelConfig config, ParamsVariant params);

  /// Fresh parameters. Regularized layers are scaled down so that their
  /// largest singular value does not exceed `sigma_cap`.
  static Model initialize(const ModelConfig& config, Rng& rng, double sigma_cap = 1.0);

  const ModelConfig& config() const { return config_; }
  ModelKind kind() const { return config_.kind; }
  const ParamsVariant& params() const { return params_; }
  ParamsVariant& params() { return params_; }

  std::vector<MutableNet> nets();
  std::vector<ConstNet> nets() const;
  std::vector<const MlpParams*> regularized() const;
  std::size_t parameter_count() const;

 private:
  ModelConfig config_;
  ParamsVariant params_;
};

struct LossOptions {
  double beta = 1.0;
  spectral::BiLipConfig bilip;
};

/// Loss value, its components, and gradients for every net in nets() order.
struct LossEvaluation {
  double loss = 0.0;
  double recon = 0.0;
  double kl_global = 0.0;
  double kl_local = 0.0;
  double bilip = 0.0;
  std::vector<MlpParams> gradients;
};

/// One stochastic evaluation of the batch objective with gradients.
LossEvaluation loss_and_gradients(const Model& model, std::span<const taskgen::Task> tasks, const LossOptions& opts,
                                  Rng& noise_rng, Rng& solver_rng);

/// Predictive samples at x_star given a context set. CNP ignores `samples`.
PredictiveSet predict(const Model& model, std::span<const Vector> x_context, std::span<const Vector> y_context,
                      std::span<const Vector> x_star, Index samples, Rng& rng);

}  // namespace nplab::models
