#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "ikf/fusion/fusion.hpp"

namespace ikf::fusion {

// {metric, sender:[record], receiver:[record]}; record = {id, owner,
// samples, score (null when unscored), weak, weakness_degree, centroid}.
nlohmann::json report_to_json(const AssessmentReport& r);
AssessmentReport report_from_json(const nlohmann::json& j);
void save_report(const AssessmentReport& r, const std::filesystem::path& path);
AssessmentReport load_report(const std::filesystem::path& path);

nlohmann::json records_to_json(const std::vector<PolytopeRecord>& records);
std::vector<PolytopeRecord> records_from_json(const nlohmann::json& j, const std::string& path);

// [{id, centroid, weakness_degree}]
nlohmann::json weak_to_json(const std::vector<WeakPolytope>& weak);
std::vector<WeakPolytope> weak_from_json(const nlohmann::json& j);

}  // namespace ikf::fusion
