#include "cli.hpp"

#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "nplab/errors.hpp"

namespace nplab::cli {
namespace {

using json = nlohmann::json;

// Command-line overrides collected into a JSON patch for a config document.
class Overlay {
 public:
  template <class T>
  CLI::Option* add(CLI::App* app, const std::string& flag, const std::string& pointer, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(flag, *value, help);
    apply_.push_back([value, opt, pointer](json& patch) {
      if (opt->count() > 0) patch[json::json_pointer(pointer)] = *value;
    });
    return opt;
  }

  template <class T>
  CLI::Option* add_custom(CLI::App* app, const std::string& flag, const std::string& help,
                          std::function<void(json&, const T&)> set) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(flag, *value, help);
    apply_.push_back([value, opt, set](json& patch) {
      if (opt->count() > 0) set(patch, *value);
    });
    return opt;
  }

  json patch() const {
    json p = json::object();
    for (const auto& f : apply_) f(p);
    return p;
  }

 private:
  std::vector<std::function<void(json&)>> apply_;
};

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream is(path);
  if (!is) throw ConfigError("--config: cannot open " + path);
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError("--config: " + path + ": " + e.what());
  }
}

void add_model_options(CLI::App* app, Overlay& ov, const std::string& prefix) {
  ov.add<std::string>(app, "--model", prefix + "/model/kind", "cnp, np or dnp");
  ov.add<std::string>(app, "--attention", prefix + "/model/attention", "laplace or dot");
  ov.add<bool>(app, "--normalize-attention", prefix + "/model/normalize_attention", "true or false");
  ov.add<std::string>(app, "--variance-mode", prefix + "/model/variance_mode", "log_weighted or literal");
  ov.add_custom<int>(app, "--dims", "hidden, latent and embedding width", [prefix](json& p, const int& d) {
    for (const char* k : {"h", "z", "u"}) p[json::json_pointer(prefix + "/model/dims/" + k)] = d;
  });
}

void add_train_options(CLI::App* app, Overlay& ov, const std::string& prefix) {
  add_model_options(app, ov, prefix);
  ov.add<int>(app, "--epochs", prefix + "/epochs", "training epochs");
  ov.add<double>(app, "--lr", prefix + "/lr", "Adam learning rate");
  ov.add<int>(app, "--batch-size", prefix + "/batch_size", "tasks per batch");
  ov.add<int>(app, "--batches-per-epoch", prefix + "/batches_per_epoch", "batches per epoch");
  ov.add<double>(app, "--beta", prefix + "/beta", "bi-Lipschitz loss weight");
  ov.add<double>(app, "--lambda1", prefix + "/lambda1", "lower singular value bound");
  ov.add<double>(app, "--lambda2", prefix + "/lambda2", "upper singular value bound");
  ov.add<std::string>(app, "--sv-solver", prefix + "/sv_solver", "lobpcg or exact");
  ov.add<int>(app, "--eval-every", prefix + "/eval_every", "checkpoint every N epochs");
  ov.add<std::string>(app, "--kernel", prefix + "/data/family", "rbf, matern52 or periodic");
}

void add_data_options(CLI::App* app, Overlay& ov, const std::string& prefix) {
  ov.add<std::string>(app, "--kernel", prefix + "/family", "rbf, matern52 or periodic");
  ov.add<int>(app, "--n-target", prefix + "/n_target", "points per task");
  ov.add<double>(app, "--noise", prefix + "/noise", "observation noise standard deviation");
  ov.add_custom<std::vector<int>>(app, "--n-context", "context count, or a range LO HI",
                                  [prefix](json& p, const std::vector<int>& v) {
                                    p[json::json_pointer(prefix + "/n_context")] =
                                        v.size() == 1 ? json::array({v[0], v[0]}) : json(v);
                                  })
      ->expected(1, 2);
}

int dispatch(CLI::App& app, const std::string& config_path, const std::optional<std::uint64_t>& seed,
             const std::string& out_arg, int jobs, std::map<std::string, Overlay>& overlays,
             const std::vector<std::string>& sweeps) {
  const json file = load_config_file(config_path);
  const auto out_dir = [&](const char* cmd) { return fs::path(out_arg.empty() ? std::string("runs/") + cmd : out_arg); };

  if (app.got_subcommand("generate")) {
    GenerateConfig c;
    json patch = overlays["generate"].patch();
    if (seed) patch["/data/seed"_json_pointer] = *seed;
    update_from_json(c, file);
    update_from_json(c, patch);
    const fs::path out = out_dir("generate");
    echo_config(out, to_json(c));
    return cmd_generate(c, out);
  }
  if (app.got_subcommand("train")) {
    training::TrainConfig c;
    json patch = overlays["train"].patch();
    if (seed) patch["seed"] = *seed;
    training::update_from_json(c, file);
    training::update_from_json(c, patch);
    c.validate();
    const fs::path out = out_dir("train");
    echo_config(out, training::to_json(c));
    return cmd_train(c, out);
  }
  if (app.got_subcommand("eval")) {
    EvalConfig c;
    json patch = overlays["eval"].patch();
    if (seed) patch["seed"] = *seed;
    json merged = file;
    merged.merge_patch(patch);
    update_from_json(c, merged);
    const fs::path out = out_dir("eval");
    echo_config(out, to_json(c));
    return cmd_eval(c, out);
  }
  if (app.got_subcommand("plot")) {
    PlotConfig c;
    json patch = overlays["plot"].patch();
    if (seed) patch["seed"] = *seed;
    json merged = file;
    merged.merge_patch(patch);
    update_from_json(c, merged);
    const fs::path out = out_dir("plot");
    echo_config(out, to_json(c));
    return cmd_plot(c, out);
  }
  if (app.got_subcommand("ablate")) {
    AblateConfig c;
    json patch = overlays["ablate"].patch();
    if (seed) patch["/base/seed"_json_pointer] = *seed;
    for (const std::string& s : sweeps) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("--sweep: expected AXIS=V1,V2,... but got " + s);
      const std::string axis = s.substr(0, eq);
      json values = json::array();
      std::stringstream rest(s.substr(eq + 1));
      for (std::string item; std::getline(rest, item, ',');) {
        if (item.empty()) continue;
        // Numbers and booleans parse as JSON; anything else is a string.
        json v = json::parse(item, nullptr, false);
        values.push_back(v.is_discarded() || v.is_object() || v.is_array() ? json(item) : v);
      }
      patch["sweep"][axis] = values;
    }
    update_from_json(c, file);
    update_from_json(c, patch);
    const fs::path out = out_dir("ablate");
    echo_config(out, to_json(c));
    return cmd_ablate(c, out, jobs);
  }
  throw ConfigError("no command given");
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Neural process lab: task generation, training, evaluation, plots and ablations", "np_lab"};
  app.require_subcommand(1);

  std::string config_path, out_arg;
  std::uint64_t seed_value = 0;
  int jobs = 1;
  app.add_option("--config", config_path, "JSON config for the command");
  CLI::Option* seed_opt = app.add_option("--seed", seed_value, "seed override");
  app.add_option("--out", out_arg, "output directory (default runs/<command>)");
  app.add_option("--jobs", jobs, "parallel ablation cells (capped by NP_LAB_THREADS)")->check(CLI::PositiveNumber);

  std::map<std::string, Overlay> overlays;
  std::vector<std::string> sweeps;

  CLI::App* gen = app.add_subcommand("generate", "sample GP regression tasks to line-delimited JSON");
  gen->fallthrough();
  overlays["generate"].add<int>(gen, "--n-tasks", "/n_tasks", "number of tasks");
  add_data_options(gen, overlays["generate"], "/data");

  CLI::App* train = app.add_subcommand("train", "train a CNP, NP or DNP on freshly sampled tasks");
  train->fallthrough();
  add_train_options(train, overlays["train"], "");

  CLI::App* eval = app.add_subcommand("eval", "score a checkpoint (or exact-gp) on a dataset");
  eval->fallthrough();
  overlays["eval"].add<std::string>(eval, "--checkpoint", "/checkpoint", "checkpoint JSON or exact-gp");
  overlays["eval"].add<std::string>(eval, "--data", "/data", "tasks.jsonl");
  overlays["eval"].add<std::string>(eval, "--mask", "/mask", "target, context or all");
  overlays["eval"].add<long>(eval, "--samples", "/samples", "Monte Carlo samples per target");

  CLI::App* plot = app.add_subcommand("plot", "draw the predictive band of one 1D task as SVG");
  plot->fallthrough();
  overlays["plot"].add<std::string>(plot, "--checkpoint", "/checkpoint", "checkpoint JSON or exact-gp");
  overlays["plot"].add<std::string>(plot, "--tasks", "/tasks", "tasks.jsonl");
  overlays["plot"].add<int>(plot, "--task-index", "/task_index", "which task to draw");
  overlays["plot"].add<int>(plot, "--grid-points", "/grid_points", "grid size");
  overlays["plot"].add<double>(plot, "--lo", "/lo", "grid start");
  overlays["plot"].add<double>(plot, "--hi", "/hi", "grid end");
  overlays["plot"].add<long>(plot, "--samples", "/samples", "Monte Carlo samples per point");

  CLI::App* ablate = app.add_subcommand("ablate", "train and evaluate every cell of a sweep");
  ablate->fallthrough();
  ablate->add_option("--sweep", sweeps, "AXIS=V1,V2,... (repeatable)");
  overlays["ablate"].add<int>(ablate, "--eval-tasks", "/eval_tasks", "fresh evaluation tasks per cell");
  overlays["ablate"].add<std::string>(ablate, "--mask", "/mask", "target, context or all");
  overlays["ablate"].add<long>(ablate, "--samples", "/samples", "Monte Carlo samples per target");
  add_train_options(ablate, overlays["ablate"], "/base");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  const std::optional<std::uint64_t> seed = seed_opt->count() > 0 ? std::optional(seed_value) : std::nullopt;
  try {
    return dispatch(app, config_path, seed, out_arg, jobs, overlays, sweeps);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DimensionError& e) {
    std::cerr << "dimension error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ContractError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kConfigError;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIoError;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumericAbort;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace nplab::cli
