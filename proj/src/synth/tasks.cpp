#include "ikf/synth/tasks.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "ikf/common/error.hpp"
#include "ikf/common/random.hpp"

namespace ikf::synth {

std::string to_string(Task t) {
  switch (t) {
    case Task::P1: return "P1";
    case Task::P2: return "P2";
    case Task::P3: return "P3";
  }
  return "?";
}

Task task_from_string(const std::string& s) {
  if (s == "P1") return Task::P1;
  if (s == "P2") return Task::P2;
  if (s == "P3") return Task::P3;
  throw ConfigError("unknown task '" + s + "'");
}

std::array<double, 4> hyperplane_values(double x, double y) {
  return {2 * x + y + 2, x + 2 * y + 3, 4 * x + 3 * y - 8, 3 * x + 4 * y - 9};
}

std::array<geom::Halfspace, 4> hyperplanes() {
  return {geom::Halfspace{Eigen::Vector2d(2, 1), -2}, geom::Halfspace{Eigen::Vector2d(1, 2), -3},
          geom::Halfspace{Eigen::Vector2d(4, 3), 8}, geom::Halfspace{Eigen::Vector2d(3, 4), 9}};
}

int label(Task task, double x, double y) {
  const auto h = hyperplane_values(x, y);
  const bool n1 = h[0] < 0, n2 = h[1] < 0, n3 = h[2] < 0, n4 = h[3] < 0;
  switch (task) {
    case Task::P1: return (n1 && n2) ? 0 : 1;
    case Task::P2: return (n3 && n4) ? 1 : 0;
    case Task::P3: return ((n1 && !n2 && !n4) || (!n1 && n2 && n3) || (!n1 && !n2 && n3 && n4)) ? 1 : 0;
  }
  return 0;
}

nn::LabeledDataset generate(const TaskSpec& spec) {
  if (spec.n_samples == 0) throw ConfigError("n_samples must be at least 1");
  spec.box.validate();
  if (spec.box.dim() != 2) throw DimensionError("synthetic tasks are two-dimensional");
  Rng rng(spec.seed);
  const auto n = static_cast<Eigen::Index>(spec.n_samples);
  nn::LabeledDataset data{Eigen::MatrixXd(n, 2), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = uniform(rng, spec.box.lo[0], spec.box.hi[0]);
    const double y = uniform(rng, spec.box.lo[1], spec.box.hi[1]);
    data.inputs.row(i) << x, y;
    data.labels[i] = label(spec.task, x, y);
  }
  return data;
}

void write_csv(const nn::LabeledDataset& data, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  out << "x,y,label\n";
  for (Eigen::Index i = 0; i < data.size(); ++i)
    out << data.inputs(i, 0) << ',' << data.inputs(i, 1) << ',' << static_cast<int>(data.labels[i]) << '\n';
}

nn::LabeledDataset read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "x,y,label") throw ParseError(path.string() + ":1", "expected header x,y,label");
  std::vector<std::array<double, 3>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::array<double, 3> r{};
    std::istringstream ss(line);
    char c1 = 0, c2 = 0;
    if (!(ss >> r[0] >> c1 >> r[1] >> c2 >> r[2]) || c1 != ',' || c2 != ',')
      throw ParseError(path.string() + ":" + std::to_string(lineno), "expected x,y,label");
    rows.push_back(r);
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  nn::LabeledDataset data{Eigen::MatrixXd(n, 2), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    data.inputs.row(i) << rows[static_cast<std::size_t>(i)][0], rows[static_cast<std::size_t>(i)][1];
    data.labels[i] = rows[static_cast<std::size_t>(i)][2];
  }
  return data;
}

}  // namespace ikf::synth
