#include "nmp/env.hpp"

#include <stdexcept>

namespace nmp {

Vec make_context(const Workspace& ws, int slots) {
  if (static_cast<int>(ws.obstacles.size()) > slots) {
    throw std::invalid_argument("workspace has more obstacles than slots");
  }
  Vec ctx = Vec::Zero(context_width(slots));
  ctx[0] = ws.goal.x();
  ctx[1] = ws.goal.y();
  for (std::size_t i = 0; i < ws.obstacles.size(); ++i) {
    const auto& box = ws.obstacles[i];
    const Eigen::Index at = 2 + kObstacleFeatureWidth * static_cast<Eigen::Index>(i);
    ctx[at + 0] = box.center.x();
    ctx[at + 1] = box.center.y();
    ctx[at + 2] = box.half_extents.x();
    ctx[at + 3] = box.half_extents.y();
    ctx[at + 4] = box.rotation;
  }
  return ctx;
}

Vec2 context_goal(const Vec& context) { return {context[0], context[1]}; }

std::vector<BoxObstacle> context_obstacles(const Vec& context) {
  std::vector<BoxObstacle> out;
  const int slots =
      static_cast<int>((context.size() - 2) / kObstacleFeatureWidth);
  for (int i = 0; i < slots; ++i) {
    const Eigen::Index at = 2 + kObstacleFeatureWidth * static_cast<Eigen::Index>(i);
    BoxObstacle box;
    box.center = {context[at + 0], context[at + 1]};
    box.half_extents = {context[at + 2], context[at + 3]};
    box.rotation = context[at + 4];
    if (box.half_extents.x() > 0.0 && box.half_extents.y() > 0.0) {
      out.push_back(box);
    }
  }
  return out;
}

Vec with_goal(const Vec& context, const Vec2& goal) {
  Vec out = context;
  out[0] = goal.x();
  out[1] = goal.y();
  return out;
}

double reward_for(TransitionClass cls, double wasted) {
  switch (cls) {
    case TransitionClass::kGoal:
      return kGoalReward;
    case TransitionClass::kCollision:
      return kCollisionReward;
    case TransitionClass::kFree:
      break;
  }
  return -kStepPenalty - kWastedPenaltyCoeff * wasted;
}

Env::Env(ArmModel arm, int context_slots, int horizon)
    : arm_(std::move(arm)), context_slots_(context_slots), horizon_(horizon) {
  arm_.validate();
  if (horizon_ <= 0) throw std::invalid_argument("horizon must be positive");
}

State Env::reset(const Workspace& ws) {
  if (!collision_free(arm_, ws, ws.start)) {
    throw std::invalid_argument("workspace start is in collision");
  }
  workspace_ = ws;
  state_ = State{make_context(ws, context_slots_), ws.start};
  steps_ = 0;
  done_ = false;
  return state_;
}

Transition Env::step(const Vec& action) {
  if (done_) throw std::logic_error("step() on a finished episode");
  if (action.size() != arm_.dof()) {
    throw std::invalid_argument("action dimension mismatch");
  }
  const double norm = action.norm();
  if (norm > 1.0 + 1e-6) {
    throw std::invalid_argument("action norm exceeds 1");
  }

  const Configuration c_raw = state_.config + kMotionStepNorm * action;
  auto [c_next, wasted] = clip_to_limits(arm_, c_raw);
  const TransitionClass cls =
      classify_motion(arm_, workspace_, state_.config, c_next);

  ++steps_;
  const bool terminal = cls != TransitionClass::kFree;
  done_ = terminal || steps_ >= horizon_;

  Transition t;
  t.context = state_.context;
  t.c_from = state_.config;
  t.action = action;
  t.c_to = c_next;
  t.reward = reward_for(cls, wasted);
  t.cls = cls;
  t.done = done_;
  state_.config = std::move(c_next);
  return t;
}

std::pair<double, TransitionClass> Env::known_reward(const ArmModel& arm,
                                                     const Vec& context,
                                                     const Configuration& c_from,
                                                     const Configuration& c_to,
                                                     const Vec& action) {
  Workspace ws;
  ws.obstacles = context_obstacles(context);
  ws.bounds = Bounds::around(arm);
  ws.goal = context_goal(context);

  // Same arithmetic as step(): clipping a raw target that is already inside
  // the limits reproduces it exactly, so wasted is exactly zero there.
  const Configuration c_raw = c_from + kMotionStepNorm * action;
  const double wasted = (c_raw - c_raw.cwiseMax(arm.joint_low)
                                     .cwiseMin(arm.joint_high))
                            .norm();
  const TransitionClass cls = classify_motion(arm, ws, c_from, c_to);
  return {reward_for(cls, wasted), cls};
}

}  // namespace nmp
