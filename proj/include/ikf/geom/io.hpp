#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "ikf/geom/polytope.hpp"

namespace ikf::geom {

nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j, const std::string& field);

nlohmann::json box_to_json(const Box& b);
Box box_from_json(const nlohmann::json& j, const std::string& field);

nlohmann::json halfspaces_to_json(const std::vector<Halfspace>& hs);
std::vector<Halfspace> halfspaces_from_json(const nlohmann::json& j, const std::string& field, Eigen::Index dim);

// {dim, box:{lo, hi}, halfspaces:[{a:[...], b}]}
nlohmann::json polytope_to_json(const HPolytope& p);
HPolytope polytope_from_json(const nlohmann::json& j, const std::string& field = "polytope");

}  // namespace ikf::geom
