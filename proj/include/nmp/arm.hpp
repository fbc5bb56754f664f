#pragma once

#include <utility>
#include <vector>

#include "nmp/types.hpp"

namespace nmp {

// Agent motion per environment step, L2 norm in configuration space.
inline constexpr double kMotionStepNorm = 0.025;
// Spacing of the collision sub-sampling grid along a motion segment.
inline constexpr double kCollisionGrid = 0.001;
// A trajectory reaches the goal when the end effector is closer than this.
inline constexpr double kGoalTolerance = 0.04;

// Planar N-link arm moving in the XZ plane. Zero pose points along +Z.
struct ArmModel {
  Vec link_lengths;
  Vec joint_low;
  Vec joint_high;
  Vec2 base{0.0, 0.0};

  int dof() const { return static_cast<int>(link_lengths.size()); }
  double reach() const { return link_lengths.sum(); }

  // Throws std::invalid_argument when lengths or limits are malformed.
  void validate() const;

  // 4 links, lengths (0.1, 0.15, 0.15, 0.1) m, joint limits +-0.75*pi.
  static ArmModel default_arm();
};

// Rotated rectangle, the only obstacle primitive.
struct BoxObstacle {
  Vec2 center{0.0, 0.0};
  Vec2 half_extents{0.0, 0.0};
  double rotation = 0.0;
};

// Axis-aligned work area; leaving it counts as a collision.
struct Bounds {
  Vec2 lo{0.0, 0.0};
  Vec2 hi{0.0, 0.0};

  bool contains(const Vec2& p) const {
    return p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() &&
           p.y() <= hi.y();
  }

  // Square around the arm's reach with 10% margin.
  static Bounds around(const ArmModel& arm, double margin = 0.1);
};

// One motion planning problem: obstacles, start configuration, goal ee pose.
struct Workspace {
  std::vector<BoxObstacle> obstacles;
  Bounds bounds;
  Configuration start;
  Vec2 goal{0.0, 0.0};
};

enum class TransitionClass { kFree, kGoal, kCollision };

const char* to_string(TransitionClass c);

struct FkResult {
  Vec2 ee{0.0, 0.0};
  // Chain vertices: base followed by each link end, dof()+1 columns.
  Eigen::Matrix2Xd points;
};

// Chain positions for configuration `c`; throws on dimension mismatch.
FkResult forward_kinematics(const ArmModel& arm, const Configuration& c);

// End-effector position only (no chord list).
Vec2 fk_ee(const ArmModel& arm, const Configuration& c);

// True iff `p` lies strictly inside the box.
bool point_in_box(const BoxObstacle& box, const Vec2& p);

// True iff segment (a, b) passes through the open interior of the box.
bool segment_intersects_box(const BoxObstacle& box, const Vec2& a,
                            const Vec2& b);

// Signed distance from `p` to the box boundary; negative inside.
double box_boundary_distance(const BoxObstacle& box, const Vec2& p);

// True iff every link chord avoids all obstacle interiors and the chain stays
// inside ws.bounds.
bool collision_free(const ArmModel& arm, const Workspace& ws,
                    const Configuration& c);

// Classifies the straight configuration-space motion from c_from to c_to by
// sub-sampling at <= kCollisionGrid spacing. The goal test applies to the
// segment endpoint only. Throws when the step exceeds kMotionStepNorm.
TransitionClass classify_motion(const ArmModel& arm, const Workspace& ws,
                                const Configuration& c_from,
                                const Configuration& c_to);

// Collision-only variant without the step-size bound; used for validating
// planner extensions of arbitrary length.
bool motion_collides(const ArmModel& arm, const Workspace& ws,
                     const Configuration& c_from, const Configuration& c_to);

// Clamps each joint into its limits; second value is ||c - clipped||.
std::pair<Configuration, double> clip_to_limits(const ArmModel& arm,
                                                const Configuration& c);

}  // namespace nmp
