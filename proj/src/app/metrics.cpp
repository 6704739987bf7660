#include "ikf/app/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ikf/app/pipeline.hpp"
#include "ikf/common/error.hpp"

namespace ikf::app {

std::string to_string(Stage s) {
  switch (s) {
    case Stage::config: return "config";
    case Stage::train: return "train";
    case Stage::extract: return "extract";
    case Stage::assess: return "assess";
    case Stage::fuse: return "fuse";
    case Stage::backconvert: return "backconvert";
    case Stage::retrain: return "retrain";
    case Stage::evaluate: return "evaluate";
    case Stage::render: return "render";
    case Stage::report: return "report";
  }
  return "unknown";
}

namespace {

std::optional<double> MetricsRow::*metric_field(const std::string& name) {
  if (name == "success_rate") return &MetricsRow::success_rate;
  if (name == "mean_steps") return &MetricsRow::mean_steps;
  if (name == "accuracy") return &MetricsRow::accuracy;
  if (name == "runtime") return &MetricsRow::runtime;
  throw Error("unknown metric '" + name + "'");
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(17);
  o << v;
  return o.str();
}

double parse_double(const std::string& s, const std::string& field) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw ParseError(field, "trailing characters in '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw ParseError(field, "not a number: '" + s + "'");
  }
}

}  // namespace

std::vector<Aggregate> MetricsRecord::aggregates() const {
  std::vector<std::string> arms;
  for (const auto& r : rows)
    if (std::find(arms.begin(), arms.end(), r.arm) == arms.end()) arms.push_back(r.arm);
  std::vector<Aggregate> out;
  for (const auto& arm : arms)
    for (const auto& m : metric_names()) {
      const auto field = metric_field(m);
      std::vector<double> v;
      for (const auto& r : rows)
        if (r.arm == arm && (r.*field)) v.push_back(*(r.*field));
      if (v.empty()) continue;
      Aggregate a{arm, m, 0.0, 0.0, v.size()};
      for (double x : v) a.mean += x;
      a.mean /= static_cast<double>(v.size());
      for (double x : v) a.std += (x - a.mean) * (x - a.mean);
      a.std = std::sqrt(a.std / static_cast<double>(v.size()));
      out.push_back(a);
    }
  return out;
}

std::optional<Aggregate> MetricsRecord::aggregate(const std::string& arm, const std::string& metric) const {
  for (const auto& a : aggregates())
    if (a.arm == arm && a.metric == metric) return a;
  return std::nullopt;
}

void write_metrics_csv(const MetricsRecord& record, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f << "# experiment," << record.experiment << '\n';
  for (const auto& a : record.aggregates())
    f << "# aggregate," << a.arm << ',' << a.metric << ',' << fmt(a.mean) << ',' << fmt(a.std) << ',' << a.n << '\n';
  f << "arm,seed";
  for (const auto& m : metric_names()) f << ',' << m;
  f << '\n';
  for (const auto& r : record.rows) {
    f << r.arm << ',' << r.seed;
    for (const auto& m : metric_names()) {
      f << ',';
      if (const auto& v = r.*metric_field(m)) f << fmt(*v);
    }
    f << '\n';
  }
  if (!f) throw Error("failed writing " + path.string());
}

MetricsRecord read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot read " + path.string());
  MetricsRecord rec;
  std::string line;
  bool header_seen = false;
  std::size_t row = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (line.rfind("# experiment,", 0) == 0) {
      rec.experiment = line.substr(13);
      continue;
    }
    if (line[0] == '#') continue;
    const auto cells = split(line);
    if (!header_seen) {
      if (cells.size() != 2 + metric_names().size() || cells[0] != "arm" || cells[1] != "seed")
        throw ParseError("metrics.header", "unexpected columns");
      header_seen = true;
      continue;
    }
    const std::string where = "metrics.rows[" + std::to_string(row) + "]";
    if (cells.size() != 2 + metric_names().size()) throw ParseError(where, "wrong number of cells");
    MetricsRow r;
    r.arm = cells[0];
    try {
      r.seed = std::stoull(cells[1]);
    } catch (const std::logic_error&) {
      throw ParseError(where + ".seed", "not an integer");
    }
    for (std::size_t k = 0; k < metric_names().size(); ++k)
      if (!cells[2 + k].empty())
        r.*metric_field(metric_names()[k]) = parse_double(cells[2 + k], where + "." + metric_names()[k]);
    rec.rows.push_back(std::move(r));
    ++row;
  }
  if (!header_seen) throw ParseError("metrics.header", "missing");
  return rec;
}

std::vector<Aggregate> read_metrics_aggregates(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot read " + path.string());
  std::vector<Aggregate> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.rfind("# aggregate,", 0) != 0) continue;
    const auto c = split(line.substr(12));
    if (c.size() != 5) throw ParseError("metrics.aggregate", "expected arm,metric,mean,std,n");
    out.push_back({c[0], c[1], parse_double(c[2], "metrics.aggregate.mean"), parse_double(c[3], "metrics.aggregate.std"),
                   static_cast<std::size_t>(parse_double(c[4], "metrics.aggregate.n"))});
  }
  return out;
}

}  // namespace ikf::app
