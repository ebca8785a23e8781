#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "nplab/spectral/bilipschitz.hpp"

namespace nplab::training {

/// Noisy two-moons inputs with binary labels.
struct MoonsData {
  std::vector<Vector> x;
  std::vector<double> label;
};
MoonsData make_two_moons(int n, double noise, Rng& rng);

struct DistortionStudyConfig {
  int hidden = 32;
  int embed = 16;
  int points = 400;
  double noise = 0.1;
  int steps = 1500;
  int batch = 64;
  double lr = 1e-2;
  int pairs = 1000;
  spectral::BiLipConfig bilip;
  double slope = 0.1;
};

struct DistortionOutcome {
  spectral::DistortionReport report;
  MlpParams encoder;
};

/// Trains encoder (2 -> hidden -> hidden -> embed) plus a linear read-out to
/// regress the moon label, with beta times the bi-Lipschitz loss on the
/// encoder, then measures distance ratios on random pairs of data points.
/// The data, initialization and pairs depend only on `seed`, so runs that
/// differ only in beta are otherwise identical.
DistortionOutcome run_distortion_study(const DistortionStudyConfig& cfg, double beta, std::uint64_t seed);

}  // namespace nplab::training
