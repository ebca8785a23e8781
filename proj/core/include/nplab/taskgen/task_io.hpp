#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nplab/taskgen/tasks.hpp"

namespace nplab::taskgen {

nlohmann::json to_json(const KernelSpec& k);
KernelSpec kernel_from_json(const nlohmann::json& j);

/// One task as a single-line JSON object with fields x_context, y_context,
/// x_target, y_target (arrays of arrays) and kernel.
nlohmann::json to_json(const Task& t);
Task task_from_json(const nlohmann::json& j);

void write_tasks_jsonl(std::ostream& os, const std::vector<Task>& tasks);
std::vector<Task> read_tasks_jsonl(std::istream& is);
std::vector<Task> read_tasks_jsonl(const std::string& path);

nlohmann::json to_json(const TaskGenConfig& cfg);
/// Overlays keys present in `j` onto `cfg`; unknown keys raise ConfigError.
void update_from_json(TaskGenConfig& cfg, const nlohmann::json& j, const std::string& path = "data");

}  // namespace nplab::taskgen
