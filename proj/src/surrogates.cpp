#include "nmp/surrogates.hpp"

namespace nmp {

std::array<int, 3> class_counts(const std::vector<LabeledTransition>& data) {
  std::array<int, 3> counts = {0, 0, 0};
  for (const auto& row : data) ++counts[class_index(row.cls)];
  return counts;
}

std::vector<LabeledTransition> generate_labeled_transitions(
    const std::vector<Workspace>& workspaces, const ArmModel& arm,
    int context_slots, int n, Rng& rng) {
  if (n <= 0) throw std::invalid_argument("sample count must be positive");
  if (workspaces.empty()) throw std::invalid_argument("no workspaces");
  std::vector<LabeledTransition> out;
  out.reserve(n);
  std::vector<Vec> contexts;
  contexts.reserve(workspaces.size());
  for (const auto& ws : workspaces) {
    contexts.push_back(make_context(ws, context_slots));
  }
  while (static_cast<int>(out.size()) < n) {
    const int w = rng.uniform_int(static_cast<int>(workspaces.size()));
    const Workspace& ws = workspaces[w];
    Configuration c;
    bool found = false;
    for (int tries = 0; tries < 100; ++tries) {
      c = rng.uniform_vector(arm.joint_low, arm.joint_high);
      if (collision_free(arm, ws, c)) {
        found = true;
        break;
      }
    }
    if (!found) continue;

    LabeledTransition row;
    row.context = contexts[w];
    row.config = c;
    row.action = rng.unit_vector(arm.dof());
    const Configuration c_raw = c + kMotionStepNorm * row.action;
    auto [c_next, wasted] = clip_to_limits(arm, c_raw);
    row.cls = classify_motion(arm, ws, c, c_next);
    row.reward = reward_for(row.cls, wasted);
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace nmp
