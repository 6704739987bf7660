#include "ikf/shepherd/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ikf/common/error.hpp"
#include "ikf/nn/model_io.hpp"

namespace ikf::shepherd {

namespace {

Vec2 unit_or_zero(const Vec2& v) {
  const double n = v.norm();
  return n > 0.0 ? Vec2(v / n) : Vec2::Zero();
}

Vec2 random_unit(Rng& rng) {
  const double a = uniform(rng, -std::numbers::pi, std::numbers::pi);
  return {std::cos(a), std::sin(a)};
}

void reflect(Vec2& x, Vec2* v, double L) {
  for (int k = 0; k < 2; ++k) {
    if (x[k] < 0.0) {
      x[k] = -x[k];
      if (v) (*v)[k] = -(*v)[k];
    } else if (x[k] > L) {
      x[k] = 2.0 * L - x[k];
      if (v) (*v)[k] = -(*v)[k];
    }
    x[k] = std::clamp(x[k], 0.0, L);
  }
}

Vec2 vec_from_json(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ParseError(field, "expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out, const std::string& path) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(path + "." + key, "wrong type");
  }
}

}  // namespace

void EnvConfig::validate() const {
  if (!(field_size > 0.0)) throw ConfigError("field_size must be positive");
  if (n_sheep < 1) throw ConfigError("n_sheep must be at least 1");
  if (max_steps < 1) throw ConfigError("max_steps must be at least 1");
  if (action_repeat < 1) throw ConfigError("action_repeat must be at least 1");
  if (!(target_radius > 0.0)) throw ConfigError("target_radius must be positive");
  auto inside = [&](const Vec2& p) { return p.minCoeff() >= 0.0 && p.maxCoeff() <= field_size; };
  if (!inside(target)) throw ConfigError("target outside the field");
  if (!inside(start_lo) || !inside(start_hi) || (start_hi - start_lo).minCoeff() < 0.0)
    throw ConfigError("start region must be inside the field");
  for (const auto& o : obstacles) {
    if (!(o.radius > 0.0)) throw ConfigError("obstacle radius must be positive");
    if (!inside(o.center)) throw ConfigError("obstacle centre outside the field");
  }
}

nlohmann::json env_config_to_json(const EnvConfig& cfg) {
  nlohmann::json obs = nlohmann::json::array();
  for (const auto& o : cfg.obstacles) obs.push_back({{"center", {o.center.x(), o.center.y()}}, {"radius", o.radius}});
  const auto& p = cfg.params;
  return {{"name", cfg.name},
          {"field_size", cfg.field_size},
          {"n_sheep", cfg.n_sheep},
          {"obstacles", obs},
          {"target", {cfg.target.x(), cfg.target.y()}},
          {"target_radius", cfg.target_radius},
          {"max_steps", cfg.max_steps},
          {"action_repeat", cfg.action_repeat},
          {"start_lo", {cfg.start_lo.x(), cfg.start_lo.y()}},
          {"start_hi", {cfg.start_hi.x(), cfg.start_hi.y()}},
          {"flock_radius", cfg.flock_radius},
          {"shepherd_offset", cfg.shepherd_offset},
          {"reward_gain", cfg.reward_gain},
          {"seed", cfg.seed},
          {"strombom",
           {{"r_a", p.r_a},
            {"rho_a", p.rho_a},
            {"c", p.c},
            {"rho_s", p.rho_s},
            {"r_s", p.r_s},
            {"h", p.h},
            {"e", p.e},
            {"n_neighbors", p.n_neighbors},
            {"sheep_speed", p.sheep_speed},
            {"shepherd_speed", p.shepherd_speed}}}};
}

EnvConfig env_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("env", "expected an object");
  EnvConfig cfg;
  read_opt(j, "name", cfg.name, "env");
  read_opt(j, "field_size", cfg.field_size, "env");
  read_opt(j, "n_sheep", cfg.n_sheep, "env");
  read_opt(j, "target_radius", cfg.target_radius, "env");
  read_opt(j, "max_steps", cfg.max_steps, "env");
  read_opt(j, "action_repeat", cfg.action_repeat, "env");
  read_opt(j, "flock_radius", cfg.flock_radius, "env");
  read_opt(j, "shepherd_offset", cfg.shepherd_offset, "env");
  read_opt(j, "reward_gain", cfg.reward_gain, "env");
  read_opt(j, "seed", cfg.seed, "env");
  if (j.contains("target")) cfg.target = vec_from_json(j.at("target"), "env.target");
  if (j.contains("start_lo")) cfg.start_lo = vec_from_json(j.at("start_lo"), "env.start_lo");
  if (j.contains("start_hi")) cfg.start_hi = vec_from_json(j.at("start_hi"), "env.start_hi");
  if (j.contains("obstacles")) {
    const auto& obs = j.at("obstacles");
    if (!obs.is_array()) throw ParseError("env.obstacles", "expected an array");
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const std::string path = "env.obstacles[" + std::to_string(i) + "]";
      if (!obs[i].contains("center")) throw ParseError(path + ".center", "missing");
      Obstacle o;
      o.center = vec_from_json(obs[i].at("center"), path + ".center");
      read_opt(obs[i], "radius", o.radius, path);
      cfg.obstacles.push_back(o);
    }
  }
  if (j.contains("strombom")) {
    const auto& s = j.at("strombom");
    auto& p = cfg.params;
    read_opt(s, "r_a", p.r_a, "env.strombom");
    read_opt(s, "rho_a", p.rho_a, "env.strombom");
    read_opt(s, "c", p.c, "env.strombom");
    read_opt(s, "rho_s", p.rho_s, "env.strombom");
    read_opt(s, "r_s", p.r_s, "env.strombom");
    read_opt(s, "h", p.h, "env.strombom");
    read_opt(s, "e", p.e, "env.strombom");
    read_opt(s, "n_neighbors", p.n_neighbors, "env.strombom");
    read_opt(s, "sheep_speed", p.sheep_speed, "env.strombom");
    read_opt(s, "shepherd_speed", p.shepherd_speed, "env.strombom");
  }
  cfg.validate();
  return cfg;
}

EnvConfig load_env_config(const std::filesystem::path& path) { return env_config_from_json(nn::read_json_file(path)); }

std::string to_string(Action a) {
  switch (a) {
    case Action::north: return "north";
    case Action::northwest: return "northwest";
    case Action::west: return "west";
    case Action::southwest: return "southwest";
    case Action::south: return "south";
  }
  return "?";
}

Vec2 direction(Action a) {
  const double s = std::numbers::sqrt2 / 2.0;
  switch (a) {
    case Action::north: return {0.0, 1.0};
    case Action::northwest: return {-s, s};
    case Action::west: return {-1.0, 0.0};
    case Action::southwest: return {-s, -s};
    case Action::south: return {0.0, -1.0};
  }
  return Vec2::Zero();
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::running: return "running";
    case Outcome::success: return "success";
    case Outcome::collision_failure: return "collision_failure";
    case Outcome::timeout_failure: return "timeout_failure";
  }
  return "?";
}

Eigen::VectorXd Observation::features(double field_size) const {
  Eigen::VectorXd z(4);
  z << d_shepherd_gcm / field_size, theta_gcm_from_shepherd / std::numbers::pi, d_target_gcm / field_size,
      theta_target_from_gcm / std::numbers::pi;
  return z;
}

double heading(const Vec2& v) {
  const double a = std::atan2(v.y(), v.x());
  return a <= -std::numbers::pi ? std::numbers::pi : a;
}

Vec2 centre_of_mass(const std::vector<Vec2>& pts) {
  Vec2 s = Vec2::Zero();
  for (const auto& p : pts) s += p;
  return pts.empty() ? s : Vec2(s / static_cast<double>(pts.size()));
}

double spread(const std::vector<Vec2>& pts) {
  const Vec2 g = centre_of_mass(pts);
  double m = 0.0;
  for (const auto& p : pts) m = std::max(m, (p - g).norm());
  return m;
}

Vec2 driving_point(Action a, const Vec2& gcm, double sheep_spread, int n_sheep, const StrombomParams& p) {
  const double offset = p.r_a * std::sqrt(static_cast<double>(n_sheep)) + sheep_spread;
  return gcm - offset * direction(a);
}

ShepherdEnv::ShepherdEnv(EnvConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

Observation ShepherdEnv::observe() const {
  const Vec2 g = centre_of_mass(state_.sheep);
  Observation o;
  o.d_shepherd_gcm = (g - state_.shepherd).norm();
  o.theta_gcm_from_shepherd = heading(g - state_.shepherd);
  o.d_target_gcm = (cfg_.target - g).norm();
  o.theta_target_from_gcm = heading(cfg_.target - g);
  return o;
}

Outcome ShepherdEnv::terminal_check() const {
  for (const auto& s : state_.sheep)
    for (const auto& o : cfg_.obstacles)
      if ((s - o.center).norm() < o.radius) return Outcome::collision_failure;
  if ((centre_of_mass(state_.sheep) - cfg_.target).norm() <= cfg_.target_radius) return Outcome::success;
  if (steps_ >= cfg_.max_steps) return Outcome::timeout_failure;
  return Outcome::running;
}

Observation ShepherdEnv::reset(std::uint64_t episode_seed) {
  rng_.seed(mix_seed(cfg_.seed, episode_seed));
  const double L = cfg_.field_size;
  auto clear = [&](const Vec2& p) {
    if (p.minCoeff() < 0.0 || p.maxCoeff() > L) return false;
    for (const auto& o : cfg_.obstacles)
      if ((p - o.center).norm() < o.radius + 1.0) return false;
    return true;
  };
  Vec2 centre;
  int guard = 0;
  do {
    centre = {uniform(rng_, cfg_.start_lo.x(), cfg_.start_hi.x()), uniform(rng_, cfg_.start_lo.y(), cfg_.start_hi.y())};
    if (++guard > 10000) throw ConfigError("start region is blocked by obstacles");
  } while (!clear(centre));
  state_ = State{};
  for (int i = 0; i < cfg_.n_sheep; ++i) {
    Vec2 p;
    guard = 0;
    do {
      const double r = cfg_.flock_radius * std::sqrt(uniform01(rng_));
      p = centre + r * random_unit(rng_);
      if (++guard > 10000) throw ConfigError("cannot place sheep clear of obstacles");
    } while (!clear(p));
    state_.sheep.push_back(p);
    state_.velocity.push_back(Vec2::Zero());
  }
  const double a = uniform(rng_, 0.0, std::numbers::pi / 2.0);
  state_.shepherd = centre + cfg_.shepherd_offset * Vec2(std::cos(a), std::sin(a));
  reflect(state_.shepherd, nullptr, L);
  steps_ = 0;
  outcome_ = terminal_check();
  return observe();
}

Observation ShepherdEnv::set_state(State s) {
  if (static_cast<int>(s.sheep.size()) != cfg_.n_sheep || s.velocity.size() != s.sheep.size())
    throw DimensionError("state does not match n_sheep");
  state_ = std::move(s);
  steps_ = 0;
  outcome_ = terminal_check();
  return observe();
}

bool ShepherdEnv::collecting() const {
  const double f_n = cfg_.params.r_a * std::pow(static_cast<double>(cfg_.n_sheep), 2.0 / 3.0);
  return spread(state_.sheep) > f_n;
}

Vec2 ShepherdEnv::subgoal(Action a) const {
  const Vec2 g = centre_of_mass(state_.sheep);
  if (collecting()) {
    std::size_t far = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < state_.sheep.size(); ++i) {
      const double d = (state_.sheep[i] - g).norm();
      if (d > best) {
        best = d;
        far = i;
      }
    }
    return state_.sheep[far] + cfg_.params.r_a * unit_or_zero(state_.sheep[far] - g);
  }
  return driving_point(a, g, spread(state_.sheep), cfg_.n_sheep, cfg_.params);
}

void ShepherdEnv::tick(Action a) {
  const auto& p = cfg_.params;
  const double L = cfg_.field_size;
  const Vec2 goal = subgoal(a);
  const Vec2 to_goal = goal - state_.shepherd;
  state_.shepherd += std::min(p.shepherd_speed, to_goal.norm()) * unit_or_zero(to_goal);
  reflect(state_.shepherd, nullptr, L);

  const auto& pos = state_.sheep;
  const std::size_t n = pos.size();
  const std::size_t k = p.n_neighbors < 0 ? n - 1 : std::min<std::size_t>(static_cast<std::size_t>(p.n_neighbors), n - 1);
  std::vector<Vec2> next = pos;
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 repel = Vec2::Zero();
    dist.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const Vec2 d = pos[i] - pos[j];
      const double r = d.norm();
      if (r < p.r_a) repel += r > 0.0 ? Vec2(d / r) : Vec2::Zero();
      dist.emplace_back(r, j);
    }
    Vec2 force = p.rho_a * unit_or_zero(repel);
    const Vec2 from_shepherd = pos[i] - state_.shepherd;
    if (from_shepherd.norm() < p.r_s) {
      Vec2 attract = Vec2::Zero();
      if (k > 0) {
        std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(k), dist.end());
        Vec2 lcm = Vec2::Zero();
        for (std::size_t m = 0; m < k; ++m) lcm += pos[dist[m].second];
        attract = unit_or_zero(lcm / static_cast<double>(k) - pos[i]);
      }
      force += p.c * attract + p.rho_s * unit_or_zero(from_shepherd);
      if (p.e > 0.0) force += p.e * random_unit(rng_);
    }
    Vec2 v = p.h * state_.velocity[i] + force;
    const double speed = v.norm();
    if (speed > p.sheep_speed) v *= p.sheep_speed / speed;
    next[i] = pos[i] + v;
    reflect(next[i], &v, L);
    state_.velocity[i] = v;
  }
  state_.sheep = std::move(next);
  ++state_.tick;
}

StepResult ShepherdEnv::step(Action a) {
  if (done()) throw EpisodeStateError("step called on a finished episode (" + to_string(outcome_) + ")");
  const double before = (centre_of_mass(state_.sheep) - cfg_.target).norm();
  Outcome out = Outcome::running;
  for (int r = 0; r < cfg_.action_repeat && out == Outcome::running; ++r) {
    tick(a);
    for (const auto& s : state_.sheep)
      for (const auto& o : cfg_.obstacles)
        if ((s - o.center).norm() < o.radius) out = Outcome::collision_failure;
    if (out == Outcome::running && (centre_of_mass(state_.sheep) - cfg_.target).norm() <= cfg_.target_radius)
      out = Outcome::success;
  }
  ++steps_;
  if (out == Outcome::running && steps_ >= cfg_.max_steps) out = Outcome::timeout_failure;
  outcome_ = out;

  StepResult res;
  res.observation = observe();
  res.reward = cfg_.reward_gain * (before - res.observation.d_target_gcm) / cfg_.field_size;
  if (out == Outcome::success) res.reward += 1.0;
  if (out == Outcome::collision_failure) res.reward -= 1.0;
  res.outcome = out;
  res.done = out != Outcome::running;
  return res;
}

TrajectoryWriter::TrajectoryWriter(int n_sheep) : n_sheep_(n_sheep) {}

void TrajectoryWriter::record(const State& s, int action, double reward, Outcome outcome) {
  std::ostringstream row;
  row.precision(10);
  row << s.tick << ',' << s.shepherd.x() << ',' << s.shepherd.y();
  for (const auto& p : s.sheep) row << ',' << p.x() << ',' << p.y();
  row << ',' << action << ',' << reward << ',' << to_string(outcome);
  rows_.push_back(row.str());
}

void TrajectoryWriter::write(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "tick,shepherd_x,shepherd_y";
  for (int i = 0; i < n_sheep_; ++i) out << ",sheep" << i << "_x,sheep" << i << "_y";
  out << ",action,reward,outcome\n";
  for (const auto& r : rows_) out << r << '\n';
}

}  // namespace ikf::shepherd
