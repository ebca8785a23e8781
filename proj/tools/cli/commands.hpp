#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "nplab/metrics/metrics.hpp"
#include "nplab/taskgen/tasks.hpp"
#include "nplab/training/trainer.hpp"

namespace nplab::cli {

namespace fs = std::filesystem;

/// Pseudo checkpoint name that evaluates the exact GP on each task's kernel.
inline constexpr const char* kExactGp = "exact-gp";

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericAbort = 3, kIoError = 4 };

struct GenerateConfig {
  taskgen::TaskGenConfig data;
  int n_tasks = 2000;
};

struct EvalConfig {
  std::string checkpoint;
  std::string data;
  metrics::EvalMask mask = metrics::EvalMask::target;
  Index samples = 100;
  std::uint64_t seed = 0;
};

struct PlotConfig {
  std::string checkpoint;
  std::string tasks;
  int task_index = 0;
  int grid_points = 200;
  double lo = -4.0;
  double hi = 4.0;
  Index samples = 100;
  std::uint64_t seed = 0;
};

/// Cross product over the listed values of each axis, on top of `base`.
struct AblateConfig {
  training::TrainConfig base;
  std::vector<std::pair<std::string, std::vector<nlohmann::json>>> sweep;
  int eval_tasks = 500;
  metrics::EvalMask mask = metrics::EvalMask::target;
  Index samples = 100;
  std::uint64_t eval_seed = 0;
};

nlohmann::json to_json(const GenerateConfig& c);
nlohmann::json to_json(const EvalConfig& c);
nlohmann::json to_json(const PlotConfig& c);
nlohmann::json to_json(const AblateConfig& c);
// Each overlays the keys present in `j` and rejects unknown ones.
void update_from_json(GenerateConfig& c, const nlohmann::json& j);
void update_from_json(EvalConfig& c, const nlohmann::json& j);
void update_from_json(PlotConfig& c, const nlohmann::json& j);
void update_from_json(AblateConfig& c, const nlohmann::json& j);

/// Axes accepted in an ablation sweep.
const std::vector<std::string>& sweep_axes();
/// JSON patch for TrainConfig that sets one sweep axis to `value`.
nlohmann::json sweep_patch(const std::string& axis, const nlohmann::json& value);

/// Writes the resolved config to dir/config.json, creating the directory.
void echo_config(const fs::path& dir, const nlohmann::json& resolved);

// Commands. Each writes into `out` and returns a process exit code; errors
// other than a training abort are thrown.
int cmd_generate(const GenerateConfig& c, const fs::path& out);
int cmd_train(const training::TrainConfig& c, const fs::path& out);
int cmd_eval(const EvalConfig& c, const fs::path& out);
int cmd_plot(const PlotConfig& c, const fs::path& out);
int cmd_ablate(const AblateConfig& c, const fs::path& out, int jobs);

/// Worker bound from --jobs, capped by NP_LAB_THREADS when set.
int worker_count(int requested);

}  // namespace nplab::cli
