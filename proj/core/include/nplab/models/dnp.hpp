#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "nplab/models/attention.hpp"
#include "nplab/models/common.hpp"
#include "nplab/models/layout.hpp"
#include "nplab/spectral/bilipschitz.hpp"
#include "nplab/taskgen/tasks.hpp"

namespace nplab::models {

/// Named view of one network inside a parameter set.
template <class Net>
struct NetRef {
  std::string_view name;
  Net* net;
  bool regularized;
};
using MutableNet = NetRef<MlpParams>;
using ConstNet = NetRef<const MlpParams>;

struct DnpParams {
  MlpParams global_encoder;         // d_x+d_y -> d_h -> d_h -> d_h
  MlpParams global_prior_head;      // d_h -> 2 d_z
  MlpParams global_posterior_head;  // d_h -> 2 d_z
  MlpParams local_backbone;         // d_x -> d_h -> d_h, regularized
  MlpParams embed_head;             // d_h -> d_u, regularized
  MlpParams local_param_head;       // d_h+d_y -> 2 d_z
  MlpParams decoder;                // 2 d_z+d_u -> d_h -> d_h -> 2 d_y

  std::vector<MutableNet> nets();
  std::vector<ConstNet> nets() const;
};

DnpParams make_dnp(const ModelDims& dims, Rng& rng, double slope = kDefaultLeakySlope);

struct BoundDnp {
  BoundMlp global_encoder, global_prior_head, global_posterior_head, local_backbone, embed_head, local_param_head,
      decoder;

  std::vector<const BoundMlp*> all() const;
  std::vector<const BoundMlp*> regularized() const { return {&local_backbone, &embed_head}; }
};

BoundDnp bind(ad::Tape& tape, const DnpParams& p, bool trainable = true);

/// Standard-normal draws behind one training step.
struct DnpNoise {
  Matrix global;  // tasks x d_z
  Matrix local;   // queries x d_z, in layout query order
};
DnpNoise sample_dnp_noise(const BatchLayout& layout, Index d_z, Rng& rng);

/// Negative ELBO averaged over the tasks of the layout (no regularizer).
LossTerms dnp_elbo_loss(const BoundDnp& net, const BatchLayout& layout, const AttentionConfig& attn,
                        const DnpNoise& noise);

/// Negative ELBO plus beta times the bi-Lipschitz loss of the regularized nets.
LossTerms dnp_total_loss(const BoundDnp& net, const BatchLayout& layout, const AttentionConfig& attn,
                         const DnpNoise& noise, const spectral::BiLipConfig& bilip, double beta, Rng& solver_rng);

// Per-task operations.

enum class GlobalHead { prior, posterior };

DiagGaussian encode_global(const DnpParams& p, std::span<const Vector> xs, std::span<const Vector> ys,
                           GlobalHead head);
std::vector<Vector> embed_inputs(const DnpParams& p, std::span<const Vector> xs);
DiagGaussian local_posterior(const DnpParams& p, const Vector& x_t, const Vector& y_t);
DiagGaussian decode(const DnpParams& p, const Vector& z_global, const Vector& z_local, const Vector& u_t);

struct ElboReport {
  double loss = 0.0;  // negative ELBO
  double recon = 0.0;
  double kl_global = 0.0;
  double kl_local = 0.0;
};
ElboReport dnp_elbo(const DnpParams& p, const AttentionConfig& attn, const taskgen::Task& task, Rng& rng);
double dnp_total_loss(const DnpParams& p, const AttentionConfig& attn, const taskgen::Task& task,
                      const spectral::BiLipConfig& bilip, double beta, Rng& rng);

/// Latent draws for prediction: S global rows and, per target, S local rows
/// (row t * S + s).
struct PredictNoise {
  Matrix global;
  Matrix local;
};
PredictNoise sample_predict_noise(std::size_t targets, Index samples, Index d_z, Rng& rng);

/// Local prior at each target (mean, clamped log-variance), rows in x_star order.
GaussianRows dnp_local_prior(const DnpParams& p, const AttentionConfig& attn, ad::Tape& tape,
                             std::span<const Vector> x_context, std::span<const Vector> y_context,
                             std::span<const Vector> x_star);

PredictiveSet dnp_predict(const DnpParams& p, const AttentionConfig& attn, std::span<const Vector> x_context,
                          std::span<const Vector> y_context, std::span<const Vector> x_star, Index samples, Rng& rng);
PredictiveSet dnp_predict(const DnpParams& p, const AttentionConfig& attn, std::span<const Vector> x_context,
                          std::span<const Vector> y_context, std::span<const Vector> x_star,
                          const PredictNoise& noise);

}  // namespace nplab::models
