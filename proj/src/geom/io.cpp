#include "ikf/geom/io.hpp"

#include "ikf/common/error.hpp"

namespace ikf::geom {

using nlohmann::json;

json vector_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from_json(const json& j, const std::string& field) {
  if (!j.is_array()) throw ParseError(field, "expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(field, "expected an array of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

json box_to_json(const Box& b) { return {{"lo", vector_to_json(b.lo)}, {"hi", vector_to_json(b.hi)}}; }

Box box_from_json(const json& j, const std::string& field) {
  if (!j.is_object() || !j.contains("lo") || !j.contains("hi")) throw ParseError(field, "expected {lo, hi}");
  Box b{vector_from_json(j.at("lo"), field + ".lo"), vector_from_json(j.at("hi"), field + ".hi")};
  try {
    b.validate();
  } catch (const Error& e) {
    throw ParseError(field, e.what());
  }
  return b;
}

json halfspaces_to_json(const std::vector<Halfspace>& hs) {
  json arr = json::array();
  for (const auto& h : hs) arr.push_back({{"a", vector_to_json(h.normal)}, {"b", h.offset}});
  return arr;
}

std::vector<Halfspace> halfspaces_from_json(const json& j, const std::string& field, Eigen::Index dim) {
  if (!j.is_array()) throw ParseError(field, "expected an array");
  std::vector<Halfspace> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string f = field + "[" + std::to_string(i) + "]";
    if (!j[i].is_object() || !j[i].contains("a") || !j[i].contains("b")) throw ParseError(f, "expected {a, b}");
    Halfspace h{vector_from_json(j[i].at("a"), f + ".a"), 0.0};
    if (!j[i].at("b").is_number()) throw ParseError(f + ".b", "expected a number");
    h.offset = j[i].at("b").get<double>();
    if (h.dim() != dim) throw ParseError(f + ".a", "expected " + std::to_string(dim) + " coefficients");
    out.push_back(std::move(h));
  }
  return out;
}

json polytope_to_json(const HPolytope& p) {
  return {{"dim", p.dim()}, {"box", box_to_json(p.box)}, {"halfspaces", halfspaces_to_json(p.halfspaces)}};
}

HPolytope polytope_from_json(const json& j, const std::string& field) {
  if (!j.is_object() || !j.contains("box") || !j.contains("halfspaces"))
    throw ParseError(field, "expected {dim, box, halfspaces}");
  HPolytope p;
  p.box = box_from_json(j.at("box"), field + ".box");
  if (j.contains("dim") && j.at("dim") != p.box.dim()) throw ParseError(field + ".dim", "does not match box");
  p.halfspaces = halfspaces_from_json(j.at("halfspaces"), field + ".halfspaces", p.box.dim());
  return p;
}

}  // namespace ikf::geom
