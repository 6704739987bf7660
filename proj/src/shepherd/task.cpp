#include "ikf/shepherd/task.hpp"

#include <numbers>

#include "ikf/common/error.hpp"

namespace ikf::shepherd {

rl::EnvStep ShepherdTask::step(int action) {
  if (action < 0 || action >= kNumActions) throw Error("action index out of range");
  const StepResult r = env_.step(static_cast<Action>(action));
  rl::EnvStep out;
  out.state = r.observation.features(env_.config().field_size);
  out.reward = r.reward;
  out.done = r.done;
  out.terminal = r.outcome == Outcome::success || r.outcome == Outcome::collision_failure;
  out.success = r.outcome == Outcome::success;
  return out;
}

geom::Box feature_box() {
  geom::Box b;
  b.lo = Eigen::Vector4d(0.0, -1.0, 0.0, -1.0);
  b.hi = Eigen::Vector4d(std::numbers::sqrt2, 1.0, std::numbers::sqrt2, 1.0);
  return b;
}

}  // namespace ikf::shepherd
