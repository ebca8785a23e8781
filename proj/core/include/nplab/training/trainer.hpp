#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nplab/models/model.hpp"
#include "nplab/taskgen/tasks.hpp"
#include "nplab/training/adam.hpp"

namespace nplab::training {

struct TrainConfig {
  models::ModelConfig model;
  taskgen::TaskGenConfig data;  // data.seed is not used; the stream derives from `seed`
  double lr = 1e-3;
  int epochs = 200;
  int batch_size = 50;
  int batches_per_epoch = 100;
  double beta = 1.0;
  spectral::BiLipConfig bilip;
  double clip_norm = 10.0;
  int eval_every = 0;  // checkpoint cadence in epochs; 0 writes only the final one
  std::uint64_t seed = 0;

  /// Throws ConfigError listing every offending field path.
  void validate() const;
  AdamConfig adam() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
/// Overlays keys present in `j`; unknown keys raise ConfigError.
void update_from_json(TrainConfig& cfg, const nlohmann::json& j);

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double recon = 0.0;
  double kl_global = 0.0;
  double kl_local = 0.0;
  double bilip = 0.0;
  double sigma_min_worst = 0.0;  // exact, over regularized layers; NaN when there are none
  double sigma_max_worst = 0.0;
  int rejected_steps = 0;
  int clipped_steps = 0;
};

struct TrainResult {
  models::Model model;
  std::vector<EpochLog> log;
  bool aborted = false;  // a non-finite loss stopped training
  std::string abort_reason;
};

struct TrainCallbacks {
  std::function<void(const EpochLog&, const models::Model&)> on_epoch;
};

/// Trains on freshly generated task batches. A deterministic function of the
/// config: the same config and build give bit-identical logs and parameters.
/// On a non-finite loss, returns the last parameters that produced a finite
/// loss with aborted set.
TrainResult train(const TrainConfig& cfg, const TrainCallbacks& callbacks = {});

/// Exact spectrum summary of a model's regularized layers (NaN without any).
std::pair<double, double> regularized_sigma_range(const models::Model& model);

void write_training_log_csv(std::ostream& os, const std::vector<EpochLog>& log, int batches_per_epoch);

}  // namespace nplab::training
