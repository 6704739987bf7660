#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ikf::app {

std::string_view version();

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data);
// Hash of the compact JSON dump (keys sorted), as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

struct Manifest {
  std::string command;
  nlohmann::json config;
  std::vector<std::uint64_t> seeds;
  double runtime_seconds = 0.0;
  std::vector<std::string> outputs;  // relative to the output directory
};

// Adds version, config_hash and library versions.
nlohmann::json manifest_to_json(const Manifest& m);
void write_manifest(const Manifest& m, const std::filesystem::path& path);

}  // namespace ikf::app
