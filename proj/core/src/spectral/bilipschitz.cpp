#include "nplab/spectral/bilipschitz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nplab/errors.hpp"

namespace nplab::spectral {

void BiLipConfig::validate() const {
  if (!(lambda1 > 0.0)) throw ConfigError("lambda1: must be > 0");
  if (!(lambda2 >= lambda1)) throw ConfigError("lambda2: must be >= lambda1");
  if (iterations < 1 || iterations > 50) throw ConfigError("lobpcg_iterations: must lie in [1, 50]");
}

SpectralBounds extremal_sv(const Matrix& w, const BiLipConfig& cfg, Rng& rng) {
  if (cfg.solver == SvSolver::exact) return exact_extremal_sv(w);
  return lobpcg_extremal_sv(w, cfg.iterations, rng);
}

double layer_penalty(const SpectralBounds& b, const BiLipConfig& cfg) {
  const double low = std::max(0.0, cfg.lambda1 - b.sigma_min);
  const double high = std::max(0.0, b.sigma_max - cfg.lambda2);
  return low * low + high * high;
}

Matrix layer_penalty_gradient(const SpectralBounds& b, const BiLipConfig& cfg) {
  const double low = std::max(0.0, cfg.lambda1 - b.sigma_min);
  const double high = std::max(0.0, b.sigma_max - cfg.lambda2);
  Matrix g = Matrix::Zero(b.u_max.size(), b.v_max.size());
  if (low > 0.0) g -= 2.0 * low * b.u_min * b.v_min.transpose();
  if (high > 0.0) g += 2.0 * high * b.u_max * b.v_max.transpose();
  return g;
}

double bilip_loss(std::span<const MlpParams* const> nets, const BiLipConfig& cfg, Rng& rng) {
  double total = 0.0;
  for (const MlpParams* net : nets)
    for (const Layer& l : net->layers) total += layer_penalty(extremal_sv(l.weight, cfg, rng), cfg);
  return total;
}

double bilip_loss(const MlpParams& net, const BiLipConfig& cfg, Rng& rng) {
  const MlpParams* nets[] = {&net};
  return bilip_loss(nets, cfg, rng);
}

ad::Var bilip_loss(ad::Tape& tape, std::span<const BoundMlp* const> nets, const BiLipConfig& cfg, Rng& rng) {
  std::vector<ad::Var> weights;
  std::vector<Matrix> grads;
  double total = 0.0;
  for (const BoundMlp* net : nets) {
    for (const BoundLayer& l : net->layers) {
      const SpectralBounds b = extremal_sv(l.weight.value(), cfg, rng);
      total += layer_penalty(b, cfg);
      weights.push_back(l.weight);
      grads.push_back(layer_penalty_gradient(b, cfg));
    }
  }
  Matrix value(1, 1);
  value(0, 0) = total;
  std::vector<int> ids;
  for (const ad::Var& w : weights) ids.push_back(w.id());
  return tape.record(std::move(value), weights, [ids, grads](const Matrix& g, ad::Tape& tp) {
    for (std::size_t i = 0; i < ids.size(); ++i) tp.accumulate(ids[i], g(0, 0) * grads[i]);
  });
}

LayerSpectrumSummary summarize_spectrum(std::span<const MlpParams* const> nets) {
  LayerSpectrumSummary s;
  s.sigma_min_worst = std::numeric_limits<double>::infinity();
  s.sigma_max_worst = 0.0;
  for (const MlpParams* net : nets) {
    for (const Layer& l : net->layers) {
      SpectralBounds b = exact_extremal_sv(l.weight);
      s.sigma_min_worst = std::min(s.sigma_min_worst, b.sigma_min);
      s.sigma_max_worst = std::max(s.sigma_max_worst, b.sigma_max);
      s.layers.push_back(std::move(b));
    }
  }
  if (s.layers.empty()) s.sigma_min_worst = 0.0;
  return s;
}

double lipschitz_upper_bound(const MlpParams& net) {
  double bound = 1.0;
  for (const Layer& l : net.layers) bound *= exact_extremal_sv(l.weight).sigma_max;
  return bound;
}

DistortionReport distortion_report(const MlpParams& net, std::span<const std::pair<Vector, Vector>> pairs) {
  DistortionReport r;
  for (const auto& [a, b] : pairs) {
    const double dx = (a - b).norm();
    if (!(dx > 0.0)) {
      ++r.skipped;
      continue;
    }
    const double du = (mlp_forward(net, a) - mlp_forward(net, b)).norm();
    r.ratios.push_back(du / dx);
  }
  if (r.ratios.empty()) return r;
  const auto [lo, hi] = std::minmax_element(r.ratios.begin(), r.ratios.end());
  r.min_ratio = *lo;
  r.max_ratio = *hi;
  r.spread = r.min_ratio > 0.0 ? r.max_ratio / r.min_ratio : std::numeric_limits<double>::infinity();
  return r;
}

}  // namespace nplab::spectral
