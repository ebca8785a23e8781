#pragma once

#include <span>
#include <vector>

#include "nplab/models/dnp.hpp"

namespace nplab::models {

/// Conditional neural process: deterministic mean-pooled context summary.
struct CnpParams {
  MlpParams encoder;  // d_x+d_y -> d_h -> d_h -> d_z
  MlpParams decoder;  // d_z+d_x -> d_h -> d_h -> 2 d_y

  std::vector<MutableNet> nets();
  std::vector<ConstNet> nets() const;
};

/// Latent-variable neural process with a deterministic and a latent path.
struct NpParams {
  MlpParams det_encoder;     // d_x+d_y -> d_h -> d_h -> d_z
  MlpParams latent_encoder;  // d_x+d_y -> d_h -> d_h -> d_z
  MlpParams latent_head;     // d_z -> 2 d_z, shared by prior and posterior
  MlpParams decoder;         // d_z+d_z+d_x -> d_h -> d_h -> 2 d_y

  std::vector<MutableNet> nets();
  std::vector<ConstNet> nets() const;
};

CnpParams make_cnp(const ModelDims& dims, Rng& rng, double slope = kDefaultLeakySlope);
NpParams make_np(const ModelDims& dims, Rng& rng, double slope = kDefaultLeakySlope);

struct BoundCnp {
  BoundMlp encoder, decoder;
};
struct BoundNp {
  BoundMlp det_encoder, latent_encoder, latent_head, decoder;
};
BoundCnp bind(ad::Tape& tape, const CnpParams& p, bool trainable = true);
BoundNp bind(ad::Tape& tape, const NpParams& p, bool trainable = true);

/// Mean negative log-likelihood over targets, averaged over tasks.
LossTerms cnp_loss(const BoundCnp& net, const BatchLayout& layout);

/// Negative ELBO with one KL term; `noise` is tasks x d_z.
LossTerms np_loss(const BoundNp& net, const BatchLayout& layout, const Matrix& noise);

ElboReport np_elbo(const NpParams& p, const taskgen::Task& task, Rng& rng);

/// Deterministic model: one predictive sample per target.
PredictiveSet cnp_predict(const CnpParams& p, std::span<const Vector> x_context, std::span<const Vector> y_context,
                          std::span<const Vector> x_star);

/// `noise` holds S rows of global latent draws.
PredictiveSet np_predict(const NpParams& p, std::span<const Vector> x_context, std::span<const Vector> y_context,
                         std::span<const Vector> x_star, const Matrix& noise);
PredictiveSet np_predict(const NpParams& p, std::span<const Vector> x_context, std::span<const Vector> y_context,
                         std::span<const Vector> x_star, Index samples, Rng& rng);

}  // namespace nplab::models
