#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "nplab/numerics/autodiff.hpp"
#include "nplab/numerics/mlp.hpp"
#include "nplab/spectral/extremal_sv.hpp"

namespace nplab::spectral {

enum class SvSolver { exact, lobpcg };

/// Singular-value band [lambda1, lambda2] enforced on every regularized layer.
struct BiLipConfig {
  double lambda1 = 0.1;
  double lambda2 = 1.0;
  SvSolver solver = SvSolver::lobpcg;
  int iterations = 10;  // LOBPCG steps, 1..50

  void validate() const;
};

SpectralBounds extremal_sv(const Matrix& w, const BiLipConfig& cfg, Rng& rng);

/// max(0, lambda1 - sigma_min)^2 + max(0, sigma_max - lambda2)^2 for one layer.
double layer_penalty(const SpectralBounds& b, const BiLipConfig& cfg);

/// Gradient of layer_penalty w.r.t. W with the singular vectors held fixed.
Matrix layer_penalty_gradient(const SpectralBounds& b, const BiLipConfig& cfg);

/// Sum of layer penalties over every weight matrix in the networks.
double bilip_loss(std::span<const MlpParams* const> nets, const BiLipConfig& cfg, Rng& rng);
double bilip_loss(const MlpParams& net, const BiLipConfig& cfg, Rng& rng);

/// Differentiable version; gradients flow into each bound weight matrix.
ad::Var bilip_loss(ad::Tape& tape, std::span<const BoundMlp* const> nets, const BiLipConfig& cfg, Rng& rng);

/// Worst-case extremal singular values across the networks' layers.
struct LayerSpectrumSummary {
  double sigma_min_worst = 0.0;
  double sigma_max_worst = 0.0;
  std::vector<SpectralBounds> layers;
};
LayerSpectrumSummary summarize_spectrum(std::span<const MlpParams* const> nets);

/// Product of per-layer sigma_max: an upper Lipschitz bound for MLPs whose
/// activations have slope at most 1.
double lipschitz_upper_bound(const MlpParams& net);

struct DistortionReport {
  std::vector<double> ratios;  // d_U / d_X per usable pair
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  double spread = 0.0;  // max_ratio / min_ratio, +inf when min_ratio == 0
  std::size_t skipped = 0;  // coincident pairs
};

/// Euclidean distance ratios ||h(x1) - h(x2)|| / ||x1 - x2||.
DistortionReport distortion_report(const MlpParams& net, std::span<const std::pair<Vector, Vector>> pairs);

}  // namespace nplab::spectral
