#include "ikf/app/manifest.hpp"

#include <cstdio>

#include <Eigen/Core>

#include "ikf/nn/model_io.hpp"

#ifndef IKF_VERSION
#define IKF_VERSION "0.0.0"
#endif

namespace ikf::app {

std::string_view version() { return IKF_VERSION; }

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const nlohmann::json& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(config.dump())));
  return buf;
}

nlohmann::json manifest_to_json(const Manifest& m) {
  const std::string eigen = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION);
  const std::string json = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                           "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH);
  return {{"tool", "ikf"},
          {"version", std::string(version())},
          {"command", m.command},
          {"config_hash", config_hash(m.config)},
          {"config", m.config},
          {"seeds", m.seeds},
          {"runtime_seconds", m.runtime_seconds},
          {"outputs", m.outputs},
          {"libraries", {{"eigen", eigen}, {"nlohmann_json", json}, {"compiler", __VERSION__}}}};
}

void write_manifest(const Manifest& m, const std::filesystem::path& path) { nn::write_json_file(manifest_to_json(m), path); }

}  // namespace ikf::app
