#include "nmp/planner.hpp"

#include <cmath>
#include <fstream>

#include "nmp/rng.hpp"
#include "nmp/textio.hpp"

namespace nmp {

Trajectory densify(const Trajectory& t, double max_step) {
  Trajectory out;
  out.valid = t.valid;
  out.invalid_reason = t.invalid_reason;
  if (t.configurations.empty()) return out;
  out.configurations.push_back(t.configurations.front());
  for (std::size_t i = 0; i + 1 < t.configurations.size(); ++i) {
    const Configuration& a = t.configurations[i];
    const Configuration& b = t.configurations[i + 1];
    const double dist = (b - a).norm();
    // The small slack keeps segments produced by a previous densify pass
    // from being split again by rounding noise.
    const int pieces =
        std::max(1, static_cast<int>(std::ceil(dist / max_step - 1e-12)));
    for (int k = 1; k < pieces; ++k) {
      const double s = static_cast<double>(k) / static_cast<double>(pieces);
      out.configurations.push_back(a + s * (b - a));
    }
    out.configurations.push_back(b);
  }
  return out;
}

PlanCheck validate_plan(const Trajectory& t, const Workspace& ws,
                        const ArmModel& arm) {
  if (t.configurations.empty()) return {false, "empty trajectory"};
  if ((t.configurations.front() - ws.start).lpNorm<Eigen::Infinity>() > 1e-9) {
    return {false, "start mismatch at index 0"};
  }
  const std::size_t n = t.configurations.size();
  if (n == 1) {
    if ((fk_ee(arm, t.configurations[0]) - ws.goal).norm() < kGoalTolerance) {
      return {true, {}};
    }
    return {false, "goal tolerance violated at index 0"};
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Configuration& a = t.configurations[i];
    const Configuration& b = t.configurations[i + 1];
    if ((b - a).norm() > kMotionStepNorm + 1e-9) {
      return {false, "step bound exceeded at index " + std::to_string(i)};
    }
    const TransitionClass cls = classify_motion(arm, ws, a, b);
    const bool last = (i + 2 == n);
    if (cls == TransitionClass::kCollision) {
      return {false, "collision at index " + std::to_string(i)};
    }
    if (!last && cls == TransitionClass::kGoal) {
      return {false, "premature goal at index " + std::to_string(i)};
    }
    if (last && cls != TransitionClass::kGoal) {
      return {false, "goal tolerance violated at index " + std::to_string(i + 1)};
    }
  }
  return {true, {}};
}

namespace {

struct Tree {
  std::vector<Configuration> nodes;
  std::vector<int> parent;

  int nearest(const Configuration& q) const {
    int best = 0;
    double best_d = (nodes[0] - q).squaredNorm();
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      const double d = (nodes[i] - q).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    return best;
  }

  int add(const Configuration& q, int parent_index) {
    nodes.push_back(q);
    parent.push_back(parent_index);
    return static_cast<int>(nodes.size()) - 1;
  }

  std::vector<Configuration> branch_to_root(int index) const {
    std::vector<Configuration> out;
    for (int i = index; i >= 0; i = parent[i]) out.push_back(nodes[i]);
    return out;
  }
};

enum class ExtendResult { kTrapped, kAdvanced, kReached };

// One bounded step from the nearest node toward q; appends on success.
ExtendResult extend(Tree& tree, const Configuration& q, double step,
                    const ArmModel& arm, const Workspace& ws, int& new_index) {
  const int near = tree.nearest(q);
  const Configuration& from = tree.nodes[near];
  const double dist = (q - from).norm();
  if (dist < 1e-12) {
    new_index = near;
    return ExtendResult::kReached;
  }
  const bool reaches = dist <= step;
  const Configuration target =
      reaches ? q : Configuration(from + (step / dist) * (q - from));
  if (motion_collides(arm, ws, from, target)) {
    return ExtendResult::kTrapped;
  }
  new_index = tree.add(target, near);
  return reaches ? ExtendResult::kReached : ExtendResult::kAdvanced;
}

// Up to `want` collision-free configurations whose end effector satisfies
// the goal tolerance, found by rejection within one shared budget.
std::vector<Configuration> sample_goal_configs(const Workspace& ws,
                                               const ArmModel& arm, Rng& rng,
                                               int budget, int want) {
  std::vector<Configuration> out;
  for (int i = 0; i < budget && static_cast<int>(out.size()) < want; ++i) {
    const Configuration q = rng.uniform_vector(arm.joint_low, arm.joint_high);
    if ((fk_ee(arm, q) - ws.goal).norm() >= kGoalTolerance) continue;
    if (collision_free(arm, ws, q)) out.push_back(q);
  }
  return out;
}

// First waypoint satisfying the goal ends the plan; later ones would make an
// earlier segment classify as goal and invalidate the trajectory.
void truncate_at_goal(Trajectory& t, const Workspace& ws,
                      const ArmModel& arm) {
  for (std::size_t i = 0; i < t.configurations.size(); ++i) {
    if ((fk_ee(arm, t.configurations[i]) - ws.goal).norm() < kGoalTolerance) {
      t.configurations.resize(i + 1);
      return;
    }
  }
}

}  // namespace

std::optional<Trajectory> rrt_plan(const Workspace& ws, const ArmModel& arm,
                                   const RrtParams& params) {
  if (!collision_free(arm, ws, ws.start)) return std::nullopt;

  Trajectory result;
  if ((fk_ee(arm, ws.start) - ws.goal).norm() < kGoalTolerance) {
    result.configurations = {ws.start};
    result.valid = true;
    return result;
  }

  Rng rng(params.seed);
  const std::vector<Configuration> goal_configs =
      sample_goal_configs(ws, arm, rng, params.goal_sample_budget, 3);
  if (goal_configs.empty()) return std::nullopt;

  Tree start_tree;
  start_tree.add(ws.start, -1);
  Tree goal_tree;
  for (const auto& g : goal_configs) goal_tree.add(g, -1);

  Tree* a = &start_tree;
  Tree* b = &goal_tree;
  bool a_is_start = true;

  for (int it = 0; it < params.max_iterations; ++it) {
    Configuration q_rand;
    if (rng.uniform() < params.goal_bias) {
      q_rand = goal_configs[rng.uniform_int(
          static_cast<int>(goal_configs.size()))];
    } else {
      q_rand = rng.uniform_vector(arm.joint_low, arm.joint_high);
    }

    int new_a = -1;
    if (extend(*a, q_rand, params.extension_step, arm, ws, new_a) !=
        ExtendResult::kTrapped) {
      // Greedy connect from the other tree toward the new node.
      const Configuration& target = a->nodes[new_a];
      int new_b = -1;
      ExtendResult r = ExtendResult::kAdvanced;
      while (r == ExtendResult::kAdvanced) {
        r = extend(*b, target, params.extension_step, arm, ws, new_b);
      }
      if (r == ExtendResult::kReached) {
        auto from_a = a->branch_to_root(new_a);   // target .. root_a
        auto from_b = b->branch_to_root(new_b);   // target .. root_b
        std::vector<Configuration> path(from_a.rbegin(), from_a.rend());
        path.insert(path.end(), from_b.begin() + 1, from_b.end());
        if (!a_is_start) std::reverse(path.begin(), path.end());

        Trajectory t;
        t.configurations = std::move(path);
        t = densify(t);
        truncate_at_goal(t, ws, arm);
        const PlanCheck check = validate_plan(t, ws, arm);
        t.valid = check.valid;
        t.invalid_reason = check.reason;
        if (t.valid) return t;
        // Rare grazing disagreement between the coarse edge check and the
        // densified re-check; keep searching instead of giving up.
      }
    }
    std::swap(a, b);
    a_is_start = !a_is_start;
  }
  return std::nullopt;
}

std::vector<Transition> score_demonstration(const Trajectory& t,
                                            const Workspace& ws,
                                            const ArmModel& arm,
                                            int context_slots) {
  if (!t.valid) {
    throw std::invalid_argument("cannot score an invalid trajectory");
  }
  const Vec context = make_context(ws, context_slots);
  std::vector<Transition> out;
  if (t.configurations.size() < 2) return out;
  out.reserve(t.configurations.size() - 1);
  for (std::size_t i = 0; i + 1 < t.configurations.size(); ++i) {
    const Configuration& c_from = t.configurations[i];
    const Configuration& c_to = t.configurations[i + 1];
    if ((c_to - c_from).norm() > kMotionStepNorm + 1e-9) {
      throw std::invalid_argument("trajectory must be densified before scoring");
    }
    Transition tr;
    tr.context = context;
    tr.c_from = c_from;
    tr.c_to = c_to;
    tr.action = (c_to - c_from) / kMotionStepNorm;
    auto [reward, cls] =
        Env::known_reward(arm, context, c_from, c_to, tr.action);
    tr.reward = reward;
    tr.cls = cls;
    tr.done = (i + 2 == t.configurations.size());
    out.push_back(std::move(tr));
  }
  return out;
}

void save_trajectory(const Trajectory& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "nmp-traj v1\n";
  for (const auto& c : t.configurations) out << join_g9(c) << '\n';
}

Trajectory load_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != "nmp-traj v1") {
    throw ParseError(path, 1, "expected header 'nmp-traj v1'");
  }
  Trajectory t;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      t.configurations.push_back(parse_vec(line, "configuration"));
    } catch (const std::exception& e) {
      throw ParseError(path, line_no, e.what());
    }
  }
  return t;
}

}  // namespace nmp
