#pragma once

#include <span>
#include <vector>

#include "nplab/numerics/autodiff.hpp"
#include "nplab/numerics/matrix.hpp"
#include "nplab/random.hpp"

namespace nplab {

enum class ActivationKind { identity, leaky_relu };

struct Activation {
  ActivationKind kind = ActivationKind::identity;
  double slope = 0.1;  // leaky_relu only, in (0, 1]

  static Activation identity() { return {ActivationKind::identity, 1.0}; }
  static Activation leaky(double slope = 0.1) { return {ActivationKind::leaky_relu, slope}; }
  double apply(double v) const { return kind == ActivationKind::leaky_relu && v <= 0.0 ? slope * v : v; }
};

inline constexpr double kDefaultLeakySlope = 0.1;

/// One affine layer followed by an activation: a(W x + b).
struct Layer {
  Matrix weight;  // out x in
  Vector bias;    // out
  Activation activation;

  Index input_dim() const { return weight.cols(); }
  Index output_dim() const { return weight.rows(); }
};

struct MlpParams {
  std::vector<Layer> layers;

  Index input_dim() const { return layers.empty() ? 0 : layers.front().input_dim(); }
  Index output_dim() const { return layers.empty() ? 0 : layers.back().output_dim(); }
  std::size_t parameter_count() const;
  /// Throws DimensionError/ContractError on non-composing shapes or bad slopes.
  void validate() const;
};

/// Builds an MLP with widths[0] -> widths[1] -> ... ; leaky-relu after every
/// layer except the last. Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
MlpParams make_mlp(std::span<const int> widths, Rng& rng, double slope = kDefaultLeakySlope);

/// Zero-valued parameters with the same shapes (gradient / moment buffers).
MlpParams zeros_like(const MlpParams& p);

Vector mlp_forward(const MlpParams& params, const Vector& x);
/// Row-wise forward: each row of xs is one input. Every output row is
/// bitwise independent of the other rows.
Matrix mlp_forward_rows(const MlpParams& params, const Matrix& xs);

struct BoundLayer {
  ad::Var weight;
  ad::Var bias;
  Activation activation;
};

/// MLP whose weights live on a tape.
struct BoundMlp {
  std::vector<BoundLayer> layers;
};

BoundMlp bind(ad::Tape& tape, const MlpParams& params, bool trainable = true);
ad::Var forward(const BoundMlp& net, ad::Var xs);
/// Gradients recorded on the tape for every layer, shaped like the params.
MlpParams gradients(const ad::Tape& tape, const BoundMlp& net);

}  // namespace nplab
