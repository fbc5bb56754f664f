#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nmp/env.hpp"

namespace nmp {

struct Trajectory {
  std::vector<Configuration> configurations;
  bool valid = false;
  std::string invalid_reason;
};

struct PlanCheck {
  bool valid = false;
  std::string reason;
};

struct RrtParams {
  int max_iterations = 50000;
  double extension_step = 0.5;
  double goal_bias = 0.1;
  std::uint64_t seed = 0;
  // Rejection-sampling budget for goal-satisfying configurations.
  int goal_sample_budget = 20000;
};

// Linear interpolation so consecutive waypoints are at most max_step apart.
// Existing waypoints are kept verbatim; applying it twice is the identity.
Trajectory densify(const Trajectory& t, double max_step = kMotionStepNorm);

// Discrete plan validity: starts at ws.start, every segment within the step
// bound and collision free, goal reached exactly at the final waypoint.
PlanCheck validate_plan(const Trajectory& t, const Workspace& ws,
                        const ArmModel& arm);

// Bidirectional RRT with straight-line extensions collision-checked on the
// kCollisionGrid. Returns a densified, validated trajectory, or nullopt when
// the iteration or goal-sampling budget runs out.
std::optional<Trajectory> rrt_plan(const Workspace& ws, const ArmModel& arm,
                                   const RrtParams& params);

// Converts a valid densified trajectory into replay-ready transitions with
// rewards assigned by the known reward function.
std::vector<Transition> score_demonstration(const Trajectory& t,
                                            const Workspace& ws,
                                            const ArmModel& arm,
                                            int context_slots);

void save_trajectory(const Trajectory& t, const std::string& path);
Trajectory load_trajectory(const std::string& path);

}  // namespace nmp
