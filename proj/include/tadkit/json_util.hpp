#pragma once

#include <initializer_list>
#include <set>
#include <string>

#include "json.hpp"
#include "tadkit/error.hpp"

namespace tadkit {

using json = nlohmann::json;

// Strict schema guard: every key must be known, every required key present.
// `ctx` names the enclosing object in error messages ("train.window", ...).
inline void check_keys(const json& j, const std::string& ctx,
                       std::initializer_list<const char*> required,
                       std::initializer_list<const char*> optional = {}) {
  if (!j.is_object()) throw ConfigError(ctx + ": expected a JSON object");
  std::set<std::string> known;
  for (const char* k : required) known.insert(k);
  for (const char* k : optional) known.insert(k);
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) throw ConfigError(ctx + ": unknown field '" + item.key() + "'");
  }
  for (const char* k : required) {
    if (!j.contains(k)) throw ConfigError(ctx + ": missing required field '" + std::string(k) + "'");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

}  // namespace tadkit
