#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include <Eigen/Dense>

#include "ikf/geom/polytope.hpp"
#include "ikf/nn/train.hpp"

namespace ikf::synth {

enum class Task { P1, P2, P3 };

std::string to_string(Task t);
Task task_from_string(const std::string& s);

// h1 = 2x + y + 2, h2 = x + 2y + 3, h3 = 4x + 3y - 8, h4 = 3x + 4y - 9.
std::array<double, 4> hyperplane_values(double x, double y);
std::array<geom::Halfspace, 4> hyperplanes();  // h_i(x) <= 0

// P1: 0 iff h1 < 0 and h2 < 0.
// P2: 1 iff h3 < 0 and h4 < 0.
// P3: 1 iff (h1<0, h2>=0, h4>=0) or (h1>=0, h2<0, h3<0) or
//           (h1>=0, h2>=0, h3<0, h4<0).
int label(Task task, double x, double y);

struct TaskSpec {
  Task task = Task::P1;
  std::size_t n_samples = 5000;
  geom::Box box = geom::Box::cube(2, -10, 10);
  std::uint64_t seed = 0;
};

nn::LabeledDataset generate(const TaskSpec& spec);

// Header "x,y,label".
void write_csv(const nn::LabeledDataset& data, const std::filesystem::path& path);
nn::LabeledDataset read_csv(const std::filesystem::path& path);

}  // namespace ikf::synth
