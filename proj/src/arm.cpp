#include "nmp/arm.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nmp {

void ArmModel::validate() const {
  if (link_lengths.size() == 0) {
    throw std::invalid_argument("arm needs at least one link");
  }
  if ((link_lengths.array() <= 0.0).any()) {
    throw std::invalid_argument("link lengths must be positive");
  }
  if (joint_low.size() != link_lengths.size() ||
      joint_high.size() != link_lengths.size()) {
    throw std::invalid_argument("joint limit dimension mismatch");
  }
  if ((joint_low.array() >= joint_high.array()).any()) {
    throw std::invalid_argument("joint limits must satisfy low < high");
  }
}

ArmModel ArmModel::default_arm() {
  ArmModel arm;
  arm.link_lengths = (Vec(4) << 0.1, 0.15, 0.15, 0.1).finished();
  const double limit = 0.75 * std::numbers::pi;
  arm.joint_low = Vec::Constant(4, -limit);
  arm.joint_high = Vec::Constant(4, limit);
  return arm;
}

Bounds Bounds::around(const ArmModel& arm, double margin) {
  const double r = arm.reach() * (1.0 + margin);
  Bounds b;
  b.lo = arm.base.array() - r;
  b.hi = arm.base.array() + r;
  return b;
}

const char* to_string(TransitionClass c) {
  switch (c) {
    case TransitionClass::kFree:
      return "free";
    case TransitionClass::kGoal:
      return "goal";
    case TransitionClass::kCollision:
      return "collision";
  }
  return "?";
}

FkResult forward_kinematics(const ArmModel& arm, const Configuration& c) {
  if (c.size() != arm.link_lengths.size()) {
    throw std::invalid_argument("configuration dimension mismatch");
  }
  FkResult out;
  out.points.resize(2, c.size() + 1);
  out.points.col(0) = arm.base;
  double angle = 0.0;
  Vec2 p = arm.base;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    angle += c[i];
    // Zero pose along +Z: joint angle measured from the vertical.
    p.x() += arm.link_lengths[i] * std::sin(angle);
    p.y() += arm.link_lengths[i] * std::cos(angle);
    out.points.col(i + 1) = p;
  }
  out.ee = p;
  return out;
}

Vec2 fk_ee(const ArmModel& arm, const Configuration& c) {
  if (c.size() != arm.link_lengths.size()) {
    throw std::invalid_argument("configuration dimension mismatch");
  }
  double angle = 0.0;
  Vec2 p = arm.base;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    angle += c[i];
    p.x() += arm.link_lengths[i] * std::sin(angle);
    p.y() += arm.link_lengths[i] * std::cos(angle);
  }
  return p;
}

namespace {

// Rotates `p` into the box frame (box center at origin, edges axis aligned).
inline Vec2 to_box_frame(const BoxObstacle& box, const Vec2& p) {
  const double cs = std::cos(box.rotation);
  const double sn = std::sin(box.rotation);
  const Vec2 d = p - box.center;
  return {cs * d.x() + sn * d.y(), -sn * d.x() + cs * d.y()};
}

}  // namespace

bool point_in_box(const BoxObstacle& box, const Vec2& p) {
  const Vec2 q = to_box_frame(box, p);
  return std::abs(q.x()) < box.half_extents.x() &&
         std::abs(q.y()) < box.half_extents.y();
}

bool segment_intersects_box(const BoxObstacle& box, const Vec2& a,
                            const Vec2& b) {
  // Slab clipping in the box frame. Strict comparisons keep segments that
  // merely touch the boundary classified as disjoint from the interior.
  const Vec2 p0 = to_box_frame(box, a);
  const Vec2 p1 = to_box_frame(box, b);
  const Vec2 d = p1 - p0;
  double tmin = 0.0;
  double tmax = 1.0;
  for (int axis = 0; axis < 2; ++axis) {
    const double h = box.half_extents[axis];
    if (d[axis] == 0.0) {
      if (p0[axis] <= -h || p0[axis] >= h) return false;
      continue;
    }
    double t0 = (-h - p0[axis]) / d[axis];
    double t1 = (h - p0[axis]) / d[axis];
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmin >= tmax) return false;
  }
  return true;
}

double box_boundary_distance(const BoxObstacle& box, const Vec2& p) {
  const Vec2 q = to_box_frame(box, p);
  const double dx = std::abs(q.x()) - box.half_extents.x();
  const double dy = std::abs(q.y()) - box.half_extents.y();
  if (dx <= 0.0 && dy <= 0.0) return std::max(dx, dy);  // inside, negative
  return std::hypot(std::max(dx, 0.0), std::max(dy, 0.0));
}

bool collision_free(const ArmModel& arm, const Workspace& ws,
                    const Configuration& c) {
  if (c.size() != arm.link_lengths.size()) {
    throw std::invalid_argument("configuration dimension mismatch");
  }
  Vec2 p = arm.base;
  if (!ws.bounds.contains(p)) return false;
  double angle = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    angle += c[i];
    const Vec2 q{p.x() + arm.link_lengths[i] * std::sin(angle),
                 p.y() + arm.link_lengths[i] * std::cos(angle)};
    if (!ws.bounds.contains(q)) return false;
    for (const BoxObstacle& box : ws.obstacles) {
      if (segment_intersects_box(box, p, q)) return false;
    }
    p = q;
  }
  return true;
}

bool motion_collides(const ArmModel& arm, const Workspace& ws,
                     const Configuration& c_from, const Configuration& c_to) {
  const double dist = (c_to - c_from).norm();
  const int steps = std::max(1, static_cast<int>(std::ceil(dist / kCollisionGrid)));
  // Same sample grid as a linear sweep, visited endpoints-then-midpoints so
  // long colliding segments exit early.
  Configuration probe(c_from.size());
  auto at = [&](int i) {
    const double t = static_cast<double>(i) / static_cast<double>(steps);
    probe = c_from + t * (c_to - c_from);
    return !collision_free(arm, ws, probe);
  };
  if (at(0) || at(steps)) return true;
  std::vector<std::pair<int, int>> spans;
  spans.reserve(48);
  spans.push_back({0, steps});
  while (!spans.empty()) {
    const auto [lo, hi] = spans.back();
    spans.pop_back();
    if (hi - lo <= 1) continue;
    const int mid = lo + (hi - lo) / 2;
    if (at(mid)) return true;
    spans.push_back({lo, mid});
    spans.push_back({mid, hi});
  }
  return false;
}

TransitionClass classify_motion(const ArmModel& arm, const Workspace& ws,
                                const Configuration& c_from,
                                const Configuration& c_to) {
  const double dist = (c_to - c_from).norm();
  if (dist > kMotionStepNorm + 1e-9) {
    throw std::invalid_argument("motion step exceeds bound");
  }
  if (motion_collides(arm, ws, c_from, c_to)) {
    return TransitionClass::kCollision;
  }
  if ((fk_ee(arm, c_to) - ws.goal).norm() < kGoalTolerance) {
    return TransitionClass::kGoal;
  }
  return TransitionClass::kFree;
}

std::pair<Configuration, double> clip_to_limits(const ArmModel& arm,
                                                const Configuration& c) {
  Configuration clipped =
      c.cwiseMax(arm.joint_low).cwiseMin(arm.joint_high);
  const double wasted = (c - clipped).norm();
  return {std::move(clipped), wasted};
}

}  // namespace nmp
