#include "ikf/rules/io.hpp"

#include "ikf/common/error.hpp"
#include "ikf/geom/io.hpp"
#include "ikf/nn/model_io.hpp"

namespace ikf::rules {

using nlohmann::json;

namespace {

const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(path + "." + key, "missing");
  return j.at(key);
}

json affine_to_json(const AffineMap& a) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < a.M.rows(); ++i) rows.push_back(geom::vector_to_json(a.M.row(i).transpose()));
  return {{"M", rows}, {"c", geom::vector_to_json(a.c)}};
}

AffineMap affine_from_json(const json& j, const std::string& path, Eigen::Index dim) {
  AffineMap a;
  a.c = geom::vector_from_json(require(j, "c", path), path + ".c");
  const auto& rows = require(j, "M", path);
  if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != a.c.size())
    throw ParseError(path + ".M", "expected one row per output");
  a.M.resize(a.c.size(), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string rp = path + ".M[" + std::to_string(i) + "]";
    const auto row = geom::vector_from_json(rows[i], rp);
    if (row.size() != dim) throw ParseError(rp, "expected " + std::to_string(dim) + " values");
    a.M.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return a;
}

}  // namespace

json ruleset_to_json(const RuleSet& rs) {
  json rules = json::array();
  for (const auto& r : rs.rules) {
    std::string kinds;
    for (auto k : r.kinds) kinds += k == CutKind::unit_off ? '0' : k == CutKind::unit_on ? '1' : 'd';
    json jr{{"halfspaces", geom::halfspaces_to_json(r.region.halfspaces)},
            {"kinds", kinds},
            {"decision", r.decision},
            {"affine_out", affine_to_json(r.affine_out)},
            {"pattern", pattern_to_string(r.pattern)},
            {"provenance", to_string(r.provenance)},
            {"weak", r.weak},
            {"weakness_degree", r.weakness_degree}};
    jr["score"] = r.score ? json(*r.score) : json(nullptr);
    rules.push_back(std::move(jr));
  }
  return {{"source", to_string(rs.source)}, {"state_box", geom::box_to_json(rs.state_box)}, {"rules", rules}};
}

RuleSet ruleset_from_json(const json& j) {
  RuleSet rs;
  const auto& src = require(j, "source", "ruleset");
  if (!src.is_string()) throw ParseError("ruleset.source", "expected a string");
  rs.source = source_from_string(src.get<std::string>());
  rs.state_box = geom::box_from_json(require(j, "state_box", "ruleset"), "ruleset.state_box");
  const auto& rules = require(j, "rules", "ruleset");
  if (!rules.is_array()) throw ParseError("ruleset.rules", "expected an array");
  const Eigen::Index dim = rs.state_box.dim();
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const std::string path = "ruleset.rules[" + std::to_string(i) + "]";
    const auto& jr = rules[i];
    DecisionRule r;
    r.region.box = rs.state_box;
    r.region.halfspaces = geom::halfspaces_from_json(require(jr, "halfspaces", path), path + ".halfspaces", dim);
    if (jr.contains("kinds")) {
      const auto kinds = jr.at("kinds").get<std::string>();
      if (kinds.size() != r.region.halfspaces.size())
        throw ParseError(path + ".kinds", "expected one entry per halfspace");
      for (char ch : kinds) {
        if (ch != '0' && ch != '1' && ch != 'd') throw ParseError(path + ".kinds", "expected '0', '1' or 'd'");
        r.kinds.push_back(ch == '0' ? CutKind::unit_off : ch == '1' ? CutKind::unit_on : CutKind::decision);
      }
    } else {
      r.kinds.assign(r.region.halfspaces.size(), CutKind::unit_off);
    }
    const auto& dec = require(jr, "decision", path);
    if (!dec.is_number_integer()) throw ParseError(path + ".decision", "expected an integer");
    r.decision = dec.get<int>();
    r.affine_out = affine_from_json(require(jr, "affine_out", path), path + ".affine_out", dim);
    if (jr.contains("pattern")) r.pattern = pattern_from_string(jr.at("pattern").get<std::string>());
    if (jr.contains("provenance")) r.provenance = provenance_from_string(jr.at("provenance").get<std::string>());
    if (jr.contains("score") && !jr.at("score").is_null()) r.score = jr.at("score").get<double>();
    if (jr.contains("weak")) r.weak = jr.at("weak").get<bool>();
    if (jr.contains("weakness_degree")) r.weakness_degree = jr.at("weakness_degree").get<double>();
    rs.rules.push_back(std::move(r));
  }
  return rs;
}

void save_ruleset(const RuleSet& rs, const std::filesystem::path& path) {
  nn::write_json_file(ruleset_to_json(rs), path);
}

RuleSet load_ruleset(const std::filesystem::path& path) { return ruleset_from_json(nn::read_json_file(path)); }

}  // namespace ikf::rules
