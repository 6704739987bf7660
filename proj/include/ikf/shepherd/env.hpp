#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ikf/common/random.hpp"

namespace ikf::shepherd {

using Vec2 = Eigen::Vector2d;

struct Obstacle {
  Vec2 center = Vec2::Zero();
  double radius = 1.0;
};

// Reactive flock model: sheep respond to the shepherd, to crowding and to
// the local centre of mass of their neighbours.
struct StrombomParams {
  double r_a = 2.0;    // sheep-sheep repulsion distance
  double rho_a = 2.0;  // sheep-sheep repulsion strength
  double c = 1.05;     // attraction to local centre of mass
  double rho_s = 1.0;  // shepherd repulsion strength
  double r_s = 65.0;   // shepherd detection distance
  double h = 0.5;      // inertia
  double e = 0.3;      // noise
  int n_neighbors = -1;  // -1: all other sheep
  double sheep_speed = 1.0;
  double shepherd_speed = 1.5;
};

struct EnvConfig {
  std::string name = "A";
  double field_size = 150.0;
  int n_sheep = 10;
  std::vector<Obstacle> obstacles;
  Vec2 target = Vec2(20.0, 20.0);
  double target_radius = 10.0;
  int max_steps = 1500;
  // Simulation ticks per agent decision.
  int action_repeat = 1;
  // Flock centre and shepherd placement at reset.
  Vec2 start_lo = Vec2(100.0, 100.0);
  Vec2 start_hi = Vec2(130.0, 130.0);
  double flock_radius = 8.0;
  double shepherd_offset = 20.0;
  double reward_gain = 10.0;
  StrombomParams params;
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json env_config_to_json(const EnvConfig& cfg);
EnvConfig env_config_from_json(const nlohmann::json& j);
EnvConfig load_env_config(const std::filesystem::path& path);

enum class Action { north = 0, northwest, west, southwest, south };
inline constexpr int kNumActions = 5;
std::string to_string(Action a);
// Unit compass vector (east = +x, north = +y).
Vec2 direction(Action a);

enum class Outcome { running, success, collision_failure, timeout_failure };
std::string to_string(Outcome o);

struct Observation {
  double d_shepherd_gcm = 0.0;
  double theta_gcm_from_shepherd = 0.0;
  double d_target_gcm = 0.0;
  double theta_target_from_gcm = 0.0;

  // (d_sg / L, theta / pi, d_tg / L, theta / pi)
  Eigen::VectorXd features(double field_size) const;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  Outcome outcome = Outcome::running;
};

struct State {
  std::vector<Vec2> sheep;
  std::vector<Vec2> velocity;
  Vec2 shepherd = Vec2::Zero();
  int tick = 0;
};

// Angle of v in (-pi, pi], east = 0, counter-clockwise positive.
double heading(const Vec2& v);
Vec2 centre_of_mass(const std::vector<Vec2>& pts);
// Largest sheep distance from the centre of mass.
double spread(const std::vector<Vec2>& pts);

// Point behind the flock, opposite the commanded direction, at distance
// r_a * sqrt(n) + spread from the centre of mass.
Vec2 driving_point(Action a, const Vec2& gcm, double sheep_spread, int n_sheep, const StrombomParams& p);

class ShepherdEnv {
 public:
  explicit ShepherdEnv(EnvConfig cfg);

  const EnvConfig& config() const { return cfg_; }
  const State& state() const { return state_; }
  bool done() const { return outcome_ != Outcome::running; }
  Outcome outcome() const { return outcome_; }
  int steps() const { return steps_; }

  Observation reset(std::uint64_t episode_seed);
  // Replaces the state (tests, replays); outcome recomputed.
  Observation set_state(State s);
  StepResult step(Action a);
  Observation observe() const;

  // True when the flock is too dispersed to drive.
  bool collecting() const;
  Vec2 subgoal(Action a) const;

 private:
  void tick(Action a);
  Outcome terminal_check() const;

  EnvConfig cfg_;
  State state_;
  Rng rng_;
  Outcome outcome_ = Outcome::running;
  int steps_ = 0;
};

// One row per tick: tick, shepherd, sheep positions, action, reward, outcome.
class TrajectoryWriter {
 public:
  explicit TrajectoryWriter(int n_sheep);
  void record(const State& s, int action, double reward, Outcome outcome);
  void write(const std::filesystem::path& path) const;

 private:
  int n_sheep_;
  std::vector<std::string> rows_;
};

}  // namespace ikf::shepherd
