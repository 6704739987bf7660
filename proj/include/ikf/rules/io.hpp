#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "ikf/rules/rules.hpp"

namespace ikf::rules {

// {source, state_box, rules:[{halfspaces, decision, affine_out, pattern,
//   provenance, score, weak, weakness_degree}]}
nlohmann::json ruleset_to_json(const RuleSet& rs);
RuleSet ruleset_from_json(const nlohmann::json& j);

void save_ruleset(const RuleSet& rs, const std::filesystem::path& path);
RuleSet load_ruleset(const std::filesystem::path& path);

}  // namespace ikf::rules
