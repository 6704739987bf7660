#include "ikf/fusion/io.hpp"

#include "ikf/common/error.hpp"
#include "ikf/geom/io.hpp"
#include "ikf/nn/model_io.hpp"

namespace ikf::fusion {

using nlohmann::json;

namespace {

const json& require(const json& j, const char* key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(path + "." + key, "missing");
  return j.at(key);
}

template <typename T>
T get(const json& j, const char* key, const std::string& path) {
  try {
    return require(j, key, path).get<T>();
  } catch (const json::exception&) {
    throw ParseError(path + "." + key, "wrong type");
  }
}

Owner owner_from_string(const std::string& s, const std::string& path) {
  for (Owner o : {Owner::sender, Owner::receiver, Owner::fused})
    if (to_string(o) == s) return o;
  throw ParseError(path, "unknown owner '" + s + "'");
}

}  // namespace

json records_to_json(const std::vector<PolytopeRecord>& records) {
  json out = json::array();
  for (const auto& r : records)
    out.push_back({{"id", r.id},
                   {"owner", to_string(r.owner)},
                   {"samples", r.samples_assigned},
                   {"score", r.score ? json(*r.score) : json(nullptr)},
                   {"weak", r.weak},
                   {"weakness_degree", r.weakness_degree},
                   {"centroid", geom::vector_to_json(r.centroid)}});
  return out;
}

std::vector<PolytopeRecord> records_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) throw ParseError(path, "expected an array");
  std::vector<PolytopeRecord> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    PolytopeRecord r;
    r.id = get<std::size_t>(j[i], "id", p);
    r.owner = owner_from_string(get<std::string>(j[i], "owner", p), p + ".owner");
    r.samples_assigned = get<std::size_t>(j[i], "samples", p);
    const auto& s = require(j[i], "score", p);
    if (!s.is_null()) r.score = get<double>(j[i], "score", p);
    r.weak = get<bool>(j[i], "weak", p);
    r.weakness_degree = get<double>(j[i], "weakness_degree", p);
    r.centroid = geom::vector_from_json(require(j[i], "centroid", p), p + ".centroid");
    out.push_back(std::move(r));
  }
  return out;
}

json report_to_json(const AssessmentReport& r) {
  return {{"metric", r.metric_name}, {"sender", records_to_json(r.sender)}, {"receiver", records_to_json(r.receiver)}};
}

AssessmentReport report_from_json(const json& j) {
  AssessmentReport r;
  r.metric_name = get<std::string>(j, "metric", "report");
  r.sender = records_from_json(require(j, "sender", "report"), "report.sender");
  r.receiver = records_from_json(require(j, "receiver", "report"), "report.receiver");
  return r;
}

void save_report(const AssessmentReport& r, const std::filesystem::path& path) { nn::write_json_file(report_to_json(r), path); }
AssessmentReport load_report(const std::filesystem::path& path) { return report_from_json(nn::read_json_file(path)); }

json weak_to_json(const std::vector<WeakPolytope>& weak) {
  json out = json::array();
  for (const auto& w : weak)
    out.push_back({{"id", w.id}, {"centroid", geom::vector_to_json(w.centroid)}, {"weakness_degree", w.weakness_degree}});
  return out;
}

std::vector<WeakPolytope> weak_from_json(const json& j) {
  if (!j.is_array()) throw ParseError("weak", "expected an array");
  std::vector<WeakPolytope> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = "weak[" + std::to_string(i) + "]";
    WeakPolytope w;
    w.id = get<std::size_t>(j[i], "id", p);
    w.centroid = geom::vector_from_json(require(j[i], "centroid", p), p + ".centroid");
    w.weakness_degree = get<double>(j[i], "weakness_degree", p);
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace ikf::fusion
