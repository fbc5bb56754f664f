#pragma once

#include <utility>
#include <vector>

#include "nmp/arm.hpp"
#include "nmp/workspace.hpp"

namespace nmp {

// Reward constants: free-space step penalty, terminal rewards, and the
// penalty per unit of movement wasted against joint limits.
inline constexpr double kStepPenalty = 0.01;
inline constexpr double kGoalReward = 1.0;
inline constexpr double kCollisionReward = -1.0;
inline constexpr double kWastedPenaltyCoeff = 0.05;
inline constexpr int kDefaultHorizon = 300;

// The context vector seen by every network: goal first, then `slots` obstacle
// descriptors (center, half extents, rotation), zero padded. A slot whose
// half extents are both zero is empty; real obstacles always have positive
// half extents.
inline constexpr int kObstacleFeatureWidth = 5;

inline int context_width(int slots) {
  return 2 + kObstacleFeatureWidth * slots;
}

Vec make_context(const Workspace& ws, int slots);
Vec2 context_goal(const Vec& context);
std::vector<BoxObstacle> context_obstacles(const Vec& context);

// Replaces the goal entries, keeping obstacle features.
Vec with_goal(const Vec& context, const Vec2& goal);

struct State {
  Vec context;
  Configuration config;
};

// Replay unit. `action` is the executed configuration delta divided by
// kMotionStepNorm: policy steps store the post-noise unit direction, expert
// steps may be shorter than a full step.
struct Transition {
  Vec context;
  Configuration c_from;
  Vec action;
  Configuration c_to;
  double reward = 0.0;
  TransitionClass cls = TransitionClass::kFree;
  bool done = false;
};

// Episodic MDP: state {context, configuration}, deterministic dynamics
// c' = clip(c + kMotionStepNorm * action), termination on goal, collision,
// or horizon.
class Env {
 public:
  Env(ArmModel arm, int context_slots, int horizon = kDefaultHorizon);

  // Starts an episode; throws std::invalid_argument if ws.start collides.
  State reset(const Workspace& ws);

  // Advances one step. Actions longer than a unit direction are refused
  // (the trainer re-normalizes noisy actions); shorter ones are legal so
  // expert transitions replay exactly. Throws std::logic_error once done.
  Transition step(const Vec& action);

  const State& state() const { return state_; }
  const Workspace& workspace() const { return workspace_; }
  const ArmModel& arm() const { return arm_; }
  bool done() const { return done_; }
  int steps_taken() const { return steps_; }
  int horizon() const { return horizon_; }
  int context_slots() const { return context_slots_; }

  // Pure recomputation of a step outcome from a recorded transition, under
  // the goal and obstacles encoded in `context`. Bit-identical to what
  // step() emitted for the same endpoints and action.
  static std::pair<double, TransitionClass> known_reward(
      const ArmModel& arm, const Vec& context, const Configuration& c_from,
      const Configuration& c_to, const Vec& action);

 private:
  ArmModel arm_;
  int context_slots_;
  int horizon_;
  Workspace workspace_;
  State state_;
  int steps_ = 0;
  bool done_ = true;  // step() before reset() is refused
};

double reward_for(TransitionClass cls, double wasted);

}  // namespace nmp
