#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nmp/arm.hpp"
#include "nmp/rng.hpp"

namespace nmp {

struct RangeD {
  double lo = 0.0;
  double hi = 0.0;
};

enum class ObstacleMode { kFixed, kRandom };

// One scenario = an obstacle distribution plus query counts per split.
struct ScenarioSpec {
  std::string name;
  ObstacleMode mode = ObstacleMode::kFixed;

  // kFixed: the obstacle layout shared by every workspace.
  std::vector<BoxObstacle> fixed_obstacles;

  // kRandom: per-workspace obstacle sampling ranges.
  int count_min = 1;
  int count_max = 1;
  RangeD half_w{0.015, 0.05};
  RangeD half_h{0.02, 0.12};
  RangeD pos_x{-0.38, 0.38};
  RangeD pos_z{0.08, 0.42};
  RangeD rot{-1.5707963, 1.5707963};

  int train_count = 2000;
  int test_count = 200;
  int validation_count = 1000;

  // Obstacle slots in the context vector (>= max obstacle count).
  int context_slots = 1;

  std::uint64_t seed = 1;

  void validate() const;
};

struct WorkspaceDataset {
  ScenarioSpec spec;
  std::vector<Workspace> train;
  std::vector<Workspace> test;
  std::vector<Workspace> validation;
};

// Generation gave up (over-constrained scenario).
struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Accepts a query when some obstacle center lies "between" the start end
// effector and the goal: ||o-c0|| <= ||g-c0|| and ||o-g|| <= ||g-c0||.
bool is_challenging(std::span<const Vec2> obstacle_centers, const Vec2& c0_ee,
                    const Vec2& g);

inline constexpr int kSampleRetryBudget = 10000;

// Draws one workspace: obstacles per the spec mode, then rejection-sampled
// (start, goal) with collision-free start and a challenging query. All values
// are snapped to the dataset float format, so saving is lossless.
Workspace sample_workspace(const ScenarioSpec& spec, const ArmModel& arm,
                           Rng& rng);

// Full dataset; workspace i of each split uses a sub-seed derived from
// (spec.seed, global index), so generation order does not matter.
WorkspaceDataset generate_dataset(const ScenarioSpec& spec,
                                  const ArmModel& arm);

// Single-file form: every split, one record per line.
void save_dataset(const WorkspaceDataset& ds, const std::string& path);
WorkspaceDataset load_dataset(const std::string& path);

// Per-split files (train.ws / test.ws / validation.ws); same line format.
void save_split(const std::vector<Workspace>& list, const std::string& split,
                const std::string& path);
std::vector<Workspace> load_split(const std::string& path);

// Workspace invariant check; returns an empty string when all hold.
std::string check_workspace(const Workspace& ws, const ArmModel& arm);

bool operator==(const BoxObstacle& a, const BoxObstacle& b);
bool operator==(const Workspace& a, const Workspace& b);

// Scenario spec files (key=value).
ScenarioSpec load_scenario(const std::string& path);
void save_scenario(const ScenarioSpec& spec, const std::string& path);

// Built-in scenario presets used by the experiment suites.
ScenarioSpec make_simple_scenario();
ScenarioSpec make_hard_scenario();
ScenarioSpec make_random_scenario();

}  // namespace nmp
