#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "ikf/common/error.hpp"

namespace ikf::app {

// Reads j[key] into out when present; ParseError names path.key on a type mismatch.
template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out, const std::string& path) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(path + "." + key, "wrong type");
  }
}

}  // namespace ikf::app
