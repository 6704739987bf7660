#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "ikf/nn/mlp.hpp"

namespace ikf::nn {

inline constexpr int kModelFormatVersion = 1;

// {version, dims:{input, output}, layers:[{rows, cols, weights (row-major),
// bias, activation}]}. Doubles are written in shortest round-trip form.
nlohmann::json model_to_json(const Mlp& net);
// Throws ParseError naming the offending field.
Mlp model_from_json(const nlohmann::json& j);

void save_model(const Mlp& net, const std::filesystem::path& path);
Mlp load_model(const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace ikf::nn
