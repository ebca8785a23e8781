#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <thread>

#include "nplab/errors.hpp"
#include "nplab/json_fields.hpp"
#include "nplab/metrics/report_io.hpp"
#include "nplab/models/checkpoint.hpp"
#include "nplab/taskgen/task_io.hpp"
#include "svg_plot.hpp"

namespace nplab::cli {
namespace {

using json = nlohmann::json;

std::mutex log_mutex;

void note(const std::string& line) {
  std::lock_guard<std::mutex> lock(log_mutex);
  std::cerr << line << std::endl;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw IoError("cannot write " + p.string());
  return os;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os = open_out(p);
  os << text;
  if (!os) throw IoError("write failed for " + p.string());
}

// Temporary file plus rename, so a reader never sees a half-written file.
void write_atomically(const fs::path& p, const std::string& text) {
  const fs::path tmp = p.string() + ".tmp";
  write_text(tmp, text);
  std::error_code ec;
  fs::rename(tmp, p, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

json read_json(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw IoError("cannot read " + p.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw IoError(p.string() + ": " + e.what());
  }
}

std::string mask_name(metrics::EvalMask m) { return metrics::to_string(m); }

metrics::EvalMask read_mask(const json& j, const std::string& path) {
  std::string s;
  read_field(j, "mask", s, path);
  try {
    return metrics::parse_eval_mask(s);
  } catch (const std::exception& e) {
    throw ConfigError(path + ".mask: " + e.what());
  }
}

std::string kernel_label(const std::vector<taskgen::Task>& tasks) {
  if (tasks.empty()) return "none";
  const taskgen::KernelFamily f = tasks.front().kernel.family;
  for (const auto& t : tasks)
    if (t.kernel.family != f) return "mixed";
  return taskgen::to_string(f);
}

struct LoadedModel {
  std::string name;
  std::unique_ptr<models::Model> model;  // empty for the exact GP
  metrics::Predictor predictor(Index samples) const {
    return model ? metrics::model_predictor(*model, samples) : metrics::exact_gp_predictor();
  }
};

LoadedModel load_model(const std::string& checkpoint) {
  if (checkpoint == kExactGp) return {kExactGp, nullptr};
  auto m = std::make_unique<models::Model>(models::load_checkpoint(checkpoint));
  return {models::to_string(m->kind()), std::move(m)};
}

void check_dims(const LoadedModel& m, const std::vector<taskgen::Task>& tasks) {
  if (!m.model) return;
  const models::ModelDims& d = m.model->config().dims;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (tasks[i].x_dim() != d.x || tasks[i].y_dim() != d.y) {
      throw DimensionError("task " + std::to_string(i) + " has dims (" + std::to_string(tasks[i].x_dim()) + ", " +
                           std::to_string(tasks[i].y_dim()) + ") but the checkpoint expects (" +
                           std::to_string(d.x) + ", " + std::to_string(d.y) + ")");
    }
  }
}

std::string cell_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return metrics::format_double(v.get<double>());
  std::string s = v.dump();
  std::replace(s.begin(), s.end(), ',', ';');
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config documents

json to_json(const GenerateConfig& c) { return {{"n_tasks", c.n_tasks}, {"data", taskgen::to_json(c.data)}}; }

void update_from_json(GenerateConfig& c, const json& j) {
  reject_unknown_keys(j, {"n_tasks", "data"}, "generate");
  read_field(j, "n_tasks", c.n_tasks, "generate");
  if (j.contains("data")) taskgen::update_from_json(c.data, j.at("data"), "generate.data");
  if (c.n_tasks < 1) throw ConfigError("generate.n_tasks: must be >= 1");
  c.data.validate();
}

json to_json(const EvalConfig& c) {
  return {{"checkpoint", c.checkpoint}, {"data", c.data}, {"mask", mask_name(c.mask)}, {"samples", c.samples},
          {"seed", c.seed}};
}

void update_from_json(EvalConfig& c, const json& j) {
  reject_unknown_keys(j, {"checkpoint", "data", "mask", "samples", "seed"}, "eval");
  read_field(j, "checkpoint", c.checkpoint, "eval");
  read_field(j, "data", c.data, "eval");
  if (j.contains("mask")) c.mask = read_mask(j, "eval");
  read_field(j, "samples", c.samples, "eval");
  read_field(j, "seed", c.seed, "eval");
  std::string errors;
  if (c.checkpoint.empty()) errors += "eval.checkpoint: required; ";
  if (c.data.empty()) errors += "eval.data: required; ";
  if (c.samples < 1) errors += "eval.samples: must be >= 1; ";
  if (!errors.empty()) throw ConfigError(errors.substr(0, errors.size() - 2));
}

json to_json(const PlotConfig& c) {
  return {{"checkpoint", c.checkpoint}, {"tasks", c.tasks}, {"task_index", c.task_index},
          {"grid_points", c.grid_points}, {"lo", c.lo},         {"hi", c.hi},
          {"samples", c.samples},       {"seed", c.seed}};
}

void update_from_json(PlotConfig& c, const json& j) {
  reject_unknown_keys(j, {"checkpoint", "tasks", "task_index", "grid_points", "lo", "hi", "samples", "seed"}, "plot");
  read_field(j, "checkpoint", c.checkpoint, "plot");
  read_field(j, "tasks", c.tasks, "plot");
  read_field(j, "task_index", c.task_index, "plot");
  read_field(j, "grid_points", c.grid_points, "plot");
  read_field(j, "lo", c.lo, "plot");
  read_field(j, "hi", c.hi, "plot");
  read_field(j, "samples", c.samples, "plot");
  read_field(j, "seed", c.seed, "plot");
  std::string errors;
  if (c.checkpoint.empty()) errors += "plot.checkpoint: required; ";
  if (c.tasks.empty()) errors += "plot.tasks: required; ";
  if (c.task_index < 0) errors += "plot.task_index: must be >= 0; ";
  if (c.grid_points < 2) errors += "plot.grid_points: must be >= 2; ";
  if (!(c.hi > c.lo)) errors += "plot.hi: must exceed plot.lo; ";
  if (c.samples < 1) errors += "plot.samples: must be >= 1; ";
  if (!errors.empty()) throw ConfigError(errors.substr(0, errors.size() - 2));
}

const std::vector<std::string>& sweep_axes() {
  static const std::vector<std::string> axes = {"lambda1",   "lambda2",       "beta",
                                                "n_context", "attention",     "variance_mode",
                                                "normalize_attention"};
  return axes;
}

json sweep_patch(const std::string& axis, const json& value) {
  if (axis == "lambda1" || axis == "lambda2" || axis == "beta") return {{axis, value}};
  if (axis == "n_context") {
    const json range = value.is_array() ? value : json::array({value, value});
    return {{"data", {{"n_context", range}}}};
  }
  if (axis == "attention" || axis == "variance_mode" || axis == "normalize_attention")
    return {{"model", {{axis, value}}}};
  throw ConfigError("ablate.sweep." + axis + ": unknown axis");
}

json to_json(const AblateConfig& c) {
  json sweep = json::object();
  for (const auto& [axis, values] : c.sweep) sweep[axis] = values;
  return {{"base", training::to_json(c.base)}, {"sweep", sweep},          {"eval_tasks", c.eval_tasks},
          {"mask", mask_name(c.mask)},         {"samples", c.samples},    {"eval_seed", c.eval_seed}};
}

void update_from_json(AblateConfig& c, const json& j) {
  reject_unknown_keys(j, {"base", "sweep", "eval_tasks", "mask", "samples", "eval_seed"}, "ablate");
  if (j.contains("base")) training::update_from_json(c.base, j.at("base"));
  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    if (!s.is_object()) throw ConfigError("ablate.sweep: expected an object of axis -> values");
    for (const auto& item : s.items()) {
      if (std::find(sweep_axes().begin(), sweep_axes().end(), item.key()) == sweep_axes().end())
        throw ConfigError("ablate.sweep." + item.key() + ": unknown axis");
      const json vals = item.value().is_array() ? item.value() : json::array({item.value()});
      auto it = std::find_if(c.sweep.begin(), c.sweep.end(), [&](const auto& a) { return a.first == item.key(); });
      std::vector<json> values(vals.begin(), vals.end());
      if (it == c.sweep.end()) {
        c.sweep.emplace_back(item.key(), std::move(values));
      } else {
        it->second = std::move(values);
      }
    }
  }
  read_field(j, "eval_tasks", c.eval_tasks, "ablate");
  if (j.contains("mask")) c.mask = read_mask(j, "ablate");
  read_field(j, "samples", c.samples, "ablate");
  read_field(j, "eval_seed", c.eval_seed, "ablate");
}

void echo_config(const fs::path& dir, const json& resolved) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_text(dir / "config.json", resolved.dump(2) + "\n");
}

int worker_count(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("NP_LAB_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || cap < 1) throw ConfigError("NP_LAB_THREADS: expected a positive integer");
    n = std::min<long>(n, cap);
  }
  return n;
}

// ---------------------------------------------------------------------------
// generate

int cmd_generate(const GenerateConfig& c, const fs::path& out) {
  Rng rng(c.data.seed);
  const std::vector<taskgen::Task> tasks = taskgen::make_task_batch(c.data, c.n_tasks, rng);
  {
    std::ofstream os = open_out(out / "tasks.jsonl");
    taskgen::write_tasks_jsonl(os, tasks);
    if (!os) throw IoError("write failed for " + (out / "tasks.jsonl").string());
  }
  const json meta = {{"format_version", 1},
                     {"n_tasks", c.n_tasks},
                     {"seed", c.data.seed},
                     {"generator", taskgen::to_json(c.data)},
                     {"tasks_file", "tasks.jsonl"}};
  write_text(out / "metadata.json", meta.dump(2) + "\n");
  note("wrote " + std::to_string(tasks.size()) + " tasks to " + (out / "tasks.jsonl").string());
  return kOk;
}

// ---------------------------------------------------------------------------
// train

namespace {

training::TrainResult train_into(const training::TrainConfig& c, const fs::path& out, const std::string& tag) {
  const training::TrainResult r = training::train(c, {[&](const training::EpochLog& log, const models::Model& m) {
    char line[256];
    std::snprintf(line, sizeof line, "%sepoch %d/%d loss %.5f recon %.5f bilip %.3g sigma [%.3f, %.3f]", tag.c_str(),
                  log.epoch, c.epochs, log.loss, log.recon, log.bilip, log.sigma_min_worst, log.sigma_max_worst);
    note(line);
    if (c.eval_every > 0 && log.epoch % c.eval_every == 0) {
      char name[64];
      std::snprintf(name, sizeof name, "checkpoint_epoch_%04d.json", log.epoch);
      models::save_checkpoint(m, (out / name).string());
    }
  }});
  models::save_checkpoint(r.model, (out / "checkpoint.json").string());
  std::ofstream os = open_out(out / "train_log.csv");
  training::write_training_log_csv(os, r.log, c.batches_per_epoch);
  if (!os) throw IoError("write failed for " + (out / "train_log.csv").string());
  if (r.aborted) note(tag + "training aborted: " + r.abort_reason);
  return r;
}

}  // namespace

int cmd_train(const training::TrainConfig& c, const fs::path& out) {
  const training::TrainResult r = train_into(c, out, "");
  const auto [smin, smax] = training::regularized_sigma_range(r.model);
  const json summary = {{"aborted", r.aborted},
                        {"abort_reason", r.abort_reason},
                        {"epochs_completed", r.log.size()},
                        {"final_loss", r.log.empty() ? json(nullptr) : json(r.log.back().loss)},
                        {"sigma_min_worst", std::isnan(smin) ? json(nullptr) : json(smin)},
                        {"sigma_max_worst", std::isnan(smax) ? json(nullptr) : json(smax)}};
  write_text(out / "summary.json", summary.dump(2) + "\n");
  return r.aborted ? kNumericAbort : kOk;
}

// ---------------------------------------------------------------------------
// eval

int cmd_eval(const EvalConfig& c, const fs::path& out) {
  const LoadedModel m = load_model(c.checkpoint);
  const std::vector<taskgen::Task> tasks = taskgen::read_tasks_jsonl(c.data);
  if (tasks.empty()) throw ConfigError("eval.data: dataset holds no tasks");
  check_dims(m, tasks);
  Rng rng(c.seed);
  const metrics::EvalReport r = metrics::evaluate_model(m.predictor(c.samples), tasks, c.mask, rng);
  const metrics::ReportKey key{m.name, kernel_label(tasks), c.seed, c.samples};
  {
    std::ofstream os = open_out(out / "metrics.csv");
    metrics::write_metrics_csv(os, key, {r});
  }
  {
    std::ofstream os = open_out(out / "calibration.csv");
    metrics::write_calibration_csv(os, key, {r});
  }
  char line[256];
  std::snprintf(line, sizeof line, "%s on %zu tasks, mask %s: ll %.5f ece %.5f over %zu points", m.name.c_str(),
                tasks.size(), mask_name(c.mask).c_str(), r.ll, r.ece, r.n_points);
  std::cout << line << std::endl;
  return kOk;
}

// ---------------------------------------------------------------------------
// plot

int cmd_plot(const PlotConfig& c, const fs::path& out) {
  const LoadedModel m = load_model(c.checkpoint);
  const std::vector<taskgen::Task> tasks = taskgen::read_tasks_jsonl(c.tasks);
  if (static_cast<std::size_t>(c.task_index) >= tasks.size())
    throw ConfigError("plot.task_index: " + std::to_string(c.task_index) + " is past the last task (" +
                      std::to_string(tasks.size()) + " tasks)");
  const taskgen::Task& task = tasks[static_cast<std::size_t>(c.task_index)];
  check_dims(m, {task});
  Rng rng(c.seed);
  BandPlot plot = make_band_plot(m.predictor(c.samples), task, c.grid_points, c.lo, c.hi, rng);
  plot.title = m.name + ", " + taskgen::to_string(task.kernel.family) + " task " + std::to_string(c.task_index) +
               ", mean +- 3 sd";
  write_text(out / "plot.svg", render_svg(plot));
  note("wrote " + (out / "plot.svg").string());
  return kOk;
}

// ---------------------------------------------------------------------------
// ablate

namespace {

struct Cell {
  std::string name;
  json assignment = json::object();
  training::TrainConfig config;
};

std::vector<Cell> expand(const AblateConfig& c) {
  if (c.sweep.empty()) throw ConfigError("ablate.sweep: empty sweep");
  std::size_t total = 1;
  for (const auto& [axis, values] : c.sweep) {
    if (values.empty()) throw ConfigError("ablate.sweep." + axis + ": no values");
    total *= values.size();
  }
  std::vector<Cell> cells;
  std::string errors;
  for (std::size_t idx = 0; idx < total; ++idx) {
    Cell cell;
    char name[32];
    std::snprintf(name, sizeof name, "cell_%04zu", idx);
    cell.name = name;
    cell.config = c.base;
    std::size_t rest = idx;
    // Last axis varies fastest.
    std::vector<std::size_t> pick(c.sweep.size());
    for (std::size_t a = c.sweep.size(); a-- > 0;) {
      pick[a] = rest % c.sweep[a].second.size();
      rest /= c.sweep[a].second.size();
    }
    try {
      for (std::size_t a = 0; a < c.sweep.size(); ++a) {
        const json& v = c.sweep[a].second[pick[a]];
        cell.assignment[c.sweep[a].first] = v;
        training::update_from_json(cell.config, sweep_patch(c.sweep[a].first, v));
      }
      cell.config.validate();
    } catch (const ConfigError& e) {
      errors += (errors.empty() ? "" : "; ") + cell.name + " " + cell.assignment.dump() + ": " + e.what();
    } catch (const std::invalid_argument& e) {
      errors += (errors.empty() ? "" : "; ") + cell.name + " " + cell.assignment.dump() + ": " + e.what();
    }
    cells.push_back(std::move(cell));
  }
  if (!errors.empty()) throw ConfigError(errors);
  return cells;
}

json run_cell(const AblateConfig& c, const Cell& cell, const fs::path& dir) {
  const json cell_config = {{"assignment", cell.assignment}, {"train", training::to_json(cell.config)},
                            {"eval_tasks", c.eval_tasks},    {"mask", mask_name(c.mask)},
                            {"samples", c.samples},          {"eval_seed", c.eval_seed}};
  const fs::path result_path = dir / "result.json";
  if (fs::exists(result_path)) {
    const json done = read_json(result_path);
    if (done.value("config", json()) == cell_config) {
      note(cell.name + ": already complete, skipping");
      return done;
    }
    note(cell.name + ": stale result with a different config, rerunning");
  }
  echo_config(dir, cell_config);
  const training::TrainResult r = train_into(cell.config, dir, cell.name + " ");

  taskgen::TaskGenConfig data = cell.config.data;
  Rng task_rng(c.eval_seed);
  const std::vector<taskgen::Task> tasks = taskgen::make_task_batch(data, c.eval_tasks, task_rng);
  Rng eval_rng = Rng(c.eval_seed).split("eval");
  const metrics::EvalReport e =
      metrics::evaluate_model(metrics::model_predictor(r.model, c.samples), tasks, c.mask, eval_rng);
  const auto [smin, smax] = training::regularized_sigma_range(r.model);
  const auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  const json result = {{"config", cell_config},
                       {"aborted", r.aborted},
                       {"final_loss", r.log.empty() ? json(nullptr) : num(r.log.back().loss)},
                       {"ll", num(e.ll)},
                       {"ll_target", num(e.ll_target)},
                       {"ll_context", num(e.ll_context)},
                       {"ece", num(e.ece)},
                       {"n_points", e.n_points},
                       {"sigma_min_worst", num(smin)},
                       {"sigma_max_worst", num(smax)}};
  write_atomically(result_path, result.dump(2) + "\n");
  note(cell.name + ": done");
  return result;
}

}  // namespace

int cmd_ablate(const AblateConfig& c, const fs::path& out, int jobs) {
  if (c.eval_tasks < 1) throw ConfigError("ablate.eval_tasks: must be >= 1");
  if (c.samples < 1) throw ConfigError("ablate.samples: must be >= 1");
  const std::vector<Cell> cells = expand(c);
  std::vector<json> results(cells.size());
  std::vector<std::exception_ptr> failures(cells.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        results[i] = run_cell(c, cells[i], out / "cells" / cells[i].name);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const int n = std::min<int>(worker_count(jobs), static_cast<int>(cells.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& f : failures)
    if (f) std::rethrow_exception(f);

  std::vector<std::string> columns = {"cell"};
  for (const auto& [axis, values] : c.sweep) columns.push_back(axis);
  for (const char* col : {"aborted", "final_loss", "ll", "ll_target", "ll_context", "ece", "n_points",
                          "sigma_min_worst", "sigma_max_worst"})
    columns.push_back(col);
  std::ofstream os = open_out(out / "ablation.csv");
  metrics::CsvWriter w(os, columns);
  bool any_aborted = false;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const json& r = results[i];
    std::vector<std::string> row = {cells[i].name};
    for (const auto& [axis, values] : c.sweep) row.push_back(cell_text(cells[i].assignment.at(axis)));
    const bool aborted = r.at("aborted").get<bool>();
    any_aborted = any_aborted || aborted;
    row.push_back(aborted ? "1" : "0");
    for (const char* key : {"final_loss", "ll", "ll_target", "ll_context", "ece"})
      row.push_back(r.at(key).is_null() ? "nan" : metrics::format_double(r.at(key).get<double>()));
    row.push_back(std::to_string(r.at("n_points").get<std::size_t>()));
    for (const char* key : {"sigma_min_worst", "sigma_max_worst"})
      row.push_back(r.at(key).is_null() ? "nan" : metrics::format_double(r.at(key).get<double>()));
    w.row(row);
  }
  if (!os) throw IoError("write failed for " + (out / "ablation.csv").string());
  note("wrote " + std::to_string(cells.size()) + " rows to " + (out / "ablation.csv").string());
  return any_aborted ? kNumericAbort : kOk;
}

}  // namespace nplab::cli
