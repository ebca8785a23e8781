#include "nplab/taskgen/task_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "nplab/errors.hpp"
#include "nplab/json_fields.hpp"

namespace nplab::taskgen {
namespace {

using nlohmann::json;

json points_to_json(const std::vector<Vector>& pts) {
  json arr = json::array();
  for (const Vector& p : pts) arr.push_back(std::vector<double>(p.data(), p.data() + p.size()));
  return arr;
}

std::vector<Vector> points_from_json(const json& j, const char* field) {
  if (!j.is_array()) throw ConfigError(std::string("task.") + field + ": expected an array");
  std::vector<Vector> out;
  out.reserve(j.size());
  for (const json& p : j) {
    const auto v = p.get<std::vector<double>>();
    out.emplace_back(Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size())));
  }
  return out;
}

json interval_to_json(const Interval& i) { return json::array({i.lo, i.hi}); }

Interval interval_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(path + ": expected [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

json to_json(const KernelSpec& k) {
  json j = {{"family", to_string(k.family)},
            {"lengthscale", k.lengthscale},
            {"outputscale", k.outputscale},
            {"noise", k.noise}};
  if (k.family == KernelFamily::periodic) j["period"] = k.period;
  return j;
}

KernelSpec kernel_from_json(const json& j) {
  reject_unknown_keys(j, {"family", "lengthscale", "outputscale", "period", "noise"}, "kernel");
  KernelSpec k;
  std::string family = "rbf";
  read_field(j, "family", family, "kernel");
  k.family = parse_kernel_family(family);
  read_field(j, "lengthscale", k.lengthscale, "kernel");
  read_field(j, "outputscale", k.outputscale, "kernel");
  read_field(j, "period", k.period, "kernel");
  read_field(j, "noise", k.noise, "kernel");
  k.validate();
  return k;
}

json to_json(const Task& t) {
  return {{"x_context", points_to_json(t.x_context)},
          {"y_context", points_to_json(t.y_context)},
          {"x_target", points_to_json(t.x_target)},
          {"y_target", points_to_json(t.y_target)},
          {"kernel", to_json(t.kernel)}};
}

Task task_from_json(const json& j) {
  reject_unknown_keys(j, {"x_context", "y_context", "x_target", "y_target", "kernel"}, "task");
  Task t;
  t.x_context = points_from_json(j.at("x_context"), "x_context");
  t.y_context = points_from_json(j.at("y_context"), "y_context");
  t.x_target = points_from_json(j.at("x_target"), "x_target");
  t.y_target = points_from_json(j.at("y_target"), "y_target");
  if (j.contains("kernel")) t.kernel = kernel_from_json(j.at("kernel"));
  t.validate();
  return t;
}

void write_tasks_jsonl(std::ostream& os, const std::vector<Task>& tasks) {
  for (const Task& t : tasks) os << to_json(t).dump() << '\n';
}

std::vector<Task> read_tasks_jsonl(std::istream& is) {
  std::vector<Task> tasks;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      tasks.push_back(task_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ConfigError("dataset line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return tasks;
}

std::vector<Task> read_tasks_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path + "'");
  return read_tasks_jsonl(in);
}

json to_json(const TaskGenConfig& cfg) {
  return {{"family", to_string(cfg.family)},
          {"x_dim", cfg.x_dim},
          {"x_range", interval_to_json(cfg.x_range)},
          {"n_context", json::array({cfg.n_context.lo, cfg.n_context.hi})},
          {"n_target", cfg.n_target},
          {"lengthscale", interval_to_json(cfg.lengthscale)},
          {"outputscale", interval_to_json(cfg.outputscale)},
          {"period", interval_to_json(cfg.period)},
          {"noise", cfg.noise},
          {"seed", cfg.seed}};
}

void update_from_json(TaskGenConfig& cfg, const json& j, const std::string& path) {
  reject_unknown_keys(j,
                      {"family", "x_dim", "x_range", "n_context", "n_target", "lengthscale", "outputscale",
                       "period", "noise", "seed"},
                      path);
  try {
    if (j.contains("family")) cfg.family = parse_kernel_family(j.at("family").get<std::string>());
    read_field(j, "x_dim", cfg.x_dim, path);
    if (j.contains("x_range")) cfg.x_range = interval_from_json(j.at("x_range"), path + ".x_range");
    if (j.contains("n_context")) {
      const json& r = j.at("n_context");
      if (!r.is_array() || r.size() != 2) throw ConfigError(path + ".n_context: expected [lo, hi]");
      cfg.n_context = {r[0].get<int>(), r[1].get<int>()};
    }
    read_field(j, "n_target", cfg.n_target, path);
    if (j.contains("lengthscale")) cfg.lengthscale = interval_from_json(j.at("lengthscale"), path + ".lengthscale");
    if (j.contains("outputscale")) cfg.outputscale = interval_from_json(j.at("outputscale"), path + ".outputscale");
    if (j.contains("period")) cfg.period = interval_from_json(j.at("period"), path + ".period");
    read_field(j, "noise", cfg.noise, path);
    read_field(j, "seed", cfg.seed, path);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace nplab::taskgen
