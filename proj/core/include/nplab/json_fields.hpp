#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "nplab/errors.hpp"

namespace nplab {

/// Throws ConfigError naming every key of `j` that is not in `allowed`.
inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                                const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  std::string bad;
  for (const auto& item : j.items()) {
    bool ok = false;
    for (std::string_view a : allowed) ok = ok || item.key() == a;
    if (!ok) bad += (bad.empty() ? "" : "; ") + path + "." + item.key() + ": unknown key";
  }
  if (!bad.empty()) throw ConfigError(bad);
}

/// Reads j[key] into `out` when present, reporting type errors by field path.
template <class T>
void read_field(const nlohmann::json& j, std::string_view key, T& out, const std::string& path) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + "." + std::string(key) + ": " + e.what());
  }
}

}  // namespace nplab
