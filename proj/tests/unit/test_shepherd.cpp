#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "ikf/common/error.hpp"
#include "ikf/common/random.hpp"
#include "ikf/shepherd/env.hpp"

using namespace ikf;
using namespace ikf::shepherd;

namespace {

EnvConfig quiet_config() {
  EnvConfig cfg;
  cfg.params.e = 0.0;
  return cfg;
}

State make_state(std::vector<Vec2> sheep, Vec2 shepherd) {
  State s;
  s.velocity.assign(sheep.size(), Vec2::Zero());
  s.sheep = std::move(sheep);
  s.shepherd = shepherd;
  return s;
}

const char* kPresetDir = IKF_PRESET_DIR;

}  // namespace

TEST_CASE("reset is deterministic per seed and trajectories replay") {
  EnvConfig cfg;
  cfg.seed = 17;
  ShepherdEnv a(cfg), b(cfg);
  a.reset(3);
  b.reset(3);
  CHECK(a.state().sheep == b.state().sheep);
  CHECK(a.state().shepherd == b.state().shepherd);
  for (int t = 0; t < 60; ++t) {
    const auto act = static_cast<Action>(t % kNumActions);
    const auto ra = a.step(act);
    const auto rb = b.step(act);
    CHECK(ra.reward == rb.reward);
  }
  CHECK(a.state().sheep == b.state().sheep);
  ShepherdEnv c(cfg);
  c.reset(4);
  CHECK(c.state().sheep != a.state().sheep);
}

TEST_CASE("single sheep gcm is its position") {
  EnvConfig cfg;
  cfg.n_sheep = 1;
  ShepherdEnv env(cfg);
  env.reset(0);
  CHECK(centre_of_mass(env.state().sheep) == env.state().sheep[0]);
  CHECK(spread(env.state().sheep) == 0.0);
}

TEST_CASE("scatter stays inside the field and clear of obstacles") {
  const EnvConfig cfg = load_env_config(std::filesystem::path(kPresetDir) / "env_C.json");
  ShepherdEnv env(cfg);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    env.reset(seed);
    for (const auto& p : env.state().sheep) {
      CHECK(p.minCoeff() >= 0.0);
      CHECK(p.maxCoeff() <= cfg.field_size);
      for (const auto& o : cfg.obstacles) CHECK((p - o.center).norm() >= o.radius);
    }
    const Vec2 s = env.state().shepherd;
    CHECK(s.minCoeff() >= 0.0);
    CHECK(s.maxCoeff() <= cfg.field_size);
    CHECK(env.outcome() == Outcome::running);
  }
}

TEST_CASE("out of range sheep only decay their velocity") {
  State s = make_state({{140.0, 140.0}, {130.0, 140.0}}, {10.0, 10.0});
  s.velocity = {{0.4, -0.2}, {-0.6, 0.0}};
  EnvConfig cfg = quiet_config();
  cfg.n_sheep = 2;
  ShepherdEnv two(cfg);
  two.set_state(s);
  two.step(Action::north);
  const double h = cfg.params.h;
  CHECK(two.state().sheep[0].isApprox(Vec2(140.0 + 0.4 * h, 140.0 - 0.2 * h)));
  CHECK(two.state().sheep[1].isApprox(Vec2(130.0 - 0.6 * h, 140.0)));
  CHECK(two.state().velocity[0].isApprox(Vec2(0.4 * h, -0.2 * h)));
}

TEST_CASE("sheep north of the shepherd moves north") {
  EnvConfig cfg = quiet_config();
  cfg.n_sheep = 1;
  ShepherdEnv env(cfg);
  env.set_state(make_state({{75.0, 80.0}}, {75.0, 70.0}));
  env.step(Action::north);
  // driving point for north is 2*sqrt(1) south of the sheep: (75, 78); shepherd steps 1.5 to (75, 71.5).
  CHECK(env.state().shepherd.isApprox(Vec2(75.0, 71.5)));
  // unit repulsion (0, 1) with weight 1 from rest: velocity (0, 1) within the speed cap.
  CHECK(env.state().sheep[0].x() == doctest::Approx(75.0));
  CHECK(env.state().sheep[0].y() == doctest::Approx(81.0));
}

TEST_CASE("gcm inside the target at reset is an immediate success") {
  EnvConfig cfg;
  cfg.start_lo = cfg.target;
  cfg.start_hi = cfg.target;
  cfg.flock_radius = 5.0;
  ShepherdEnv env(cfg);
  env.reset(0);
  CHECK(env.done());
  CHECK(env.outcome() == Outcome::success);
  CHECK_THROWS_AS(env.step(Action::south), EpisodeStateError);
}

TEST_CASE("timeout after max_steps") {
  EnvConfig cfg;
  cfg.max_steps = 3;
  ShepherdEnv env(cfg);
  env.reset(1);
  StepResult r;
  for (int i = 0; i < 3; ++i) {
    CHECK_FALSE(env.done());
    r = env.step(Action::west);
  }
  CHECK(r.done);
  CHECK(r.outcome == Outcome::timeout_failure);
  CHECK(r.reward == doctest::Approx(cfg.reward_gain * 0.0).epsilon(1.0));
  CHECK_THROWS_AS(env.step(Action::west), EpisodeStateError);
}

TEST_CASE("collision wins over success") {
  EnvConfig cfg = quiet_config();
  cfg.n_sheep = 1;
  cfg.target_radius = 6.0;
  cfg.obstacles = {{cfg.target, 5.0}};
  cfg.params.sheep_speed = 2.0;

  ShepherdEnv env(cfg);
  env.set_state(make_state({cfg.target}, {60.0, 60.0}));
  CHECK(env.outcome() == Outcome::collision_failure);

  State s = make_state({cfg.target + Vec2(0.0, 6.5)}, cfg.target + Vec2(0.0, 20.0));
  s.velocity[0] = {0.0, -2.0};
  env.set_state(s);
  REQUIRE(env.outcome() == Outcome::running);
  const auto r = env.step(Action::south);
  const double d = (env.state().sheep[0] - cfg.target).norm();
  REQUIRE(d < 5.0);
  CHECK(r.outcome == Outcome::collision_failure);
  CHECK(r.reward < 0.0);
}

TEST_CASE("reward is the scaled progress plus terminal bonus") {
  EnvConfig cfg;
  ShepherdEnv env(cfg);
  const auto o0 = env.reset(5);
  const auto r = env.step(Action::southwest);
  CHECK(r.reward == doctest::Approx(cfg.reward_gain * (o0.d_target_gcm - r.observation.d_target_gcm) / cfg.field_size));
}

TEST_CASE("driving point geometry") {
  const StrombomParams p;
  const Vec2 g(60.0, 70.0);
  const Vec2 n = driving_point(Action::north, g, 3.0, 10, p);
  CHECK(n.x() == doctest::Approx(g.x()));
  CHECK(n.y() < g.y());
  const Vec2 w = driving_point(Action::west, g, 3.0, 10, p);
  CHECK(w.y() == doctest::Approx(g.y()));
  CHECK(w.x() > g.x());
  const Vec2 sw = driving_point(Action::southwest, g, 3.0, 10, p);
  CHECK(sw.x() > g.x());
  CHECK(sw.y() > g.y());
  double prev = -1.0;
  for (double s = 0.0; s <= 30.0; s += 0.5) {
    const double off = (driving_point(Action::northwest, g, s, 10, p) - g).norm();
    CHECK(off > prev);
    CHECK(off == doctest::Approx(p.r_a * std::sqrt(10.0) + s));
    prev = off;
  }
}

TEST_CASE("observation conventions") {
  EnvConfig cfg;
  cfg.n_sheep = 1;
  ShepherdEnv env(cfg);
  auto o = env.set_state(make_state({{50.0, 20.0}}, {50.0, 20.0}));
  CHECK(o.d_shepherd_gcm == 0.0);
  o = env.set_state(make_state({{20.0, 0.5}}, {80.0, 80.0}));
  CHECK(o.theta_target_from_gcm == doctest::Approx(std::numbers::pi / 2));
  o = env.set_state(make_state({{40.0, 20.0}}, {80.0, 80.0}));
  CHECK(o.theta_target_from_gcm == doctest::Approx(std::numbers::pi));
  CHECK(heading(Vec2(-1.0, -0.0)) == doctest::Approx(std::numbers::pi));

  Rng rng(8);
  for (int t = 0; t < 200; ++t) {
    cfg.n_sheep = 3;
    ShepherdEnv e3(cfg);
    std::vector<Vec2> sheep;
    for (int i = 0; i < 3; ++i) sheep.emplace_back(uniform(rng, 40, 150), uniform(rng, 40, 150));
    const Vec2 sh(uniform(rng, 0, 150), uniform(rng, 0, 150));
    const auto ob = e3.set_state(make_state(sheep, sh));
    const Vec2 g = (sheep[0] + sheep[1] + sheep[2]) / 3.0;
    CHECK(ob.d_shepherd_gcm == doctest::Approx(std::hypot(g.x() - sh.x(), g.y() - sh.y())));
    CHECK(ob.d_target_gcm == doctest::Approx(std::hypot(g.x() - 20.0, g.y() - 20.0)));
    CHECK(ob.theta_gcm_from_shepherd > -std::numbers::pi);
    CHECK(ob.theta_gcm_from_shepherd <= std::numbers::pi);
    const auto z = ob.features(cfg.field_size);
    CHECK(z.size() == 4);
    CHECK(std::abs(z[1]) <= 1.0);
  }
}

TEST_CASE("speed bound and field containment over rollouts") {
  EnvConfig cfg;
  cfg.max_steps = 400;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ShepherdEnv env(cfg);
    env.reset(seed);
    Rng rng(seed);
    while (!env.done()) {
      const auto before = env.state().sheep;
      env.step(static_cast<Action>(uniform_index(rng, kNumActions)));
      for (std::size_t i = 0; i < before.size(); ++i) {
        CHECK((env.state().sheep[i] - before[i]).norm() <= cfg.params.sheep_speed + 1e-12);
        CHECK(env.state().velocity[i].norm() <= cfg.params.sheep_speed + 1e-12);
        CHECK(env.state().sheep[i].minCoeff() >= 0.0);
        CHECK(env.state().sheep[i].maxCoeff() <= cfg.field_size);
      }
      CHECK(env.state().shepherd.minCoeff() >= 0.0);
      CHECK(env.state().shepherd.maxCoeff() <= cfg.field_size);
    }
  }
}

TEST_CASE("collecting switches on when the flock is dispersed") {
  EnvConfig cfg = quiet_config();
  cfg.n_sheep = 3;
  ShepherdEnv env(cfg);
  env.set_state(make_state({{60, 60}, {61, 60}, {60, 61}}, {90, 90}));
  CHECK_FALSE(env.collecting());
  env.set_state(make_state({{60, 60}, {61, 60}, {90, 60}}, {90, 90}));
  CHECK(env.collecting());
  const Vec2 sg = env.subgoal(Action::north);
  CHECK(sg.x() > 90.0);
  CHECK(sg.y() == doctest::Approx(60.0));
}

TEST_CASE("action repeat advances several ticks per decision") {
  EnvConfig cfg;
  cfg.action_repeat = 3;
  ShepherdEnv env(cfg);
  env.reset(2);
  env.step(Action::west);
  CHECK(env.state().tick == 3);
  CHECK(env.steps() == 1);
}

TEST_CASE("config json round trip and errors") {
  const EnvConfig c = load_env_config(std::filesystem::path(kPresetDir) / "env_B.json");
  CHECK(c.obstacles.size() == 1);
  const EnvConfig back = env_config_from_json(env_config_to_json(c));
  CHECK(back.obstacles[0].center == c.obstacles[0].center);
  CHECK(back.max_steps == c.max_steps);
  CHECK(back.params.r_s == c.params.r_s);

  auto j = env_config_to_json(c);
  j["obstacles"][0]["center"] = "x";
  try {
    env_config_from_json(j);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.field() == "env.obstacles[0].center");
  }
  j = env_config_to_json(c);
  j["obstacles"][0]["center"] = {500, 5};
  CHECK_THROWS_AS(env_config_from_json(j), ConfigError);
  j = env_config_to_json(c);
  j["max_steps"] = 0;
  CHECK_THROWS_AS(env_config_from_json(j), ConfigError);
}

TEST_CASE("trajectory csv") {
  EnvConfig cfg;
  cfg.n_sheep = 2;
  cfg.max_steps = 4;
  ShepherdEnv env(cfg);
  env.reset(0);
  TrajectoryWriter w(cfg.n_sheep);
  w.record(env.state(), -1, 0.0, env.outcome());
  while (!env.done()) {
    const auto r = env.step(Action::south);
    w.record(env.state(), static_cast<int>(Action::south), r.reward, r.outcome);
  }
  const auto path = std::filesystem::temp_directory_path() / "ikf_traj_test.csv";
  w.write(path);
  std::ifstream in(path);
  std::string header, line;
  std::getline(in, header);
  CHECK(header == "tick,shepherd_x,shepherd_y,sheep0_x,sheep0_y,sheep1_x,sheep1_y,action,reward,outcome");
  int rows = 0;
  while (std::getline(in, line)) ++rows, header = line;
  CHECK(rows == 5);
  CHECK(header.ends_with("timeout_failure"));
  std::filesystem::remove(path);
}
