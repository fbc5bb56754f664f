#pragma once

#include <string>
#include <vector>

#include "nmp/config.hpp"
#include "nmp/imitation.hpp"
#include "nmp/trainer.hpp"

namespace nmp {

// Training and inference scalar for the experiment harness. Gradient
// checking instantiates the same templates with double.
using Real = float;

// A generated dataset directory plus the scenario it came from.
struct LoadedDataset {
  ScenarioSpec spec;
  std::vector<Workspace> train;
  std::vector<Workspace> test;
  std::vector<Workspace> validation;
};

// gen: writes scenario.spec, manifest.txt, train.ws, test.ws, validation.ws.
// Byte-identical for identical (spec, seed).
void generate_dataset_dir(const ScenarioSpec& spec, const ArmModel& arm,
                          const std::string& out_dir);

// Loads everything except the validation split unless asked: training must
// not touch validation data, so the file stays unread during training runs.
LoadedDataset load_dataset_dir(const std::string& dir, bool with_validation);

// train-surrogates: fits the transition classifier and reward regressor on
// the dataset's train split and writes them as one checkpoint.
struct SurrogateReport {
  double classifier_balanced_accuracy = 0.0;
  int classifier_best_epoch = -1;
  double regressor_mse = 0.0;
  double wall_seconds = 0.0;
};
SurrogateReport train_surrogates_to_file(const ExperimentConfig& cfg);

Surrogates<Real> load_surrogates(const std::string& path);

// train: the full protocol (train, evaluate each iteration on the test
// split, validate the best snapshot once on the held-out validation split).
struct RunReport {
  std::string variant;
  int iterations = 0;
  long episodes_seen = 0;
  int best_iteration = -1;
  double best_test = -1.0;
  double validation_success = -1.0;
  long demos_injected = 0;
  int demo_planner_failures = 0;
  bool stopped_on_perfect = false;
  double wall_seconds_train = 0.0;
  double wall_seconds_validation = 0.0;
};
RunReport run_training(const ExperimentConfig& cfg,
                       bool train_surrogates_if_missing = false);
void write_run_report(const RunReport& report, const std::string& path);

// eval: success rate of a checkpointed actor on one dataset split.
double run_eval(const ExperimentConfig& cfg, const std::string& checkpoint,
                const std::string& split);

// bench: wall-clock race between checkpointed-policy rollouts (including
// plan validation) and the sampling planner, on unseen workspaces.
struct BenchReport {
  int count = 0;
  int nmp_successes = 0;
  int nmp_validated = 0;
  int rrt_successes = 0;
  double nmp_total_seconds = 0.0;
  double rrt_total_seconds = 0.0;
  double hybrid_total_seconds = 0.0;
  double nmp_median_seconds = 0.0;
  double rrt_median_seconds = 0.0;
  double speedup() const {
    return nmp_total_seconds > 0.0 ? rrt_total_seconds / nmp_total_seconds
                                   : 0.0;
  }
};
BenchReport run_bench(const ExperimentConfig& cfg,
                      const std::string& checkpoint, int count,
                      const std::string& csv_path = {});
void write_bench_report(const BenchReport& report, const std::string& path);

// visitlog: end-effector visitation during early RL training vs expert plan
// targets, with the signed distance to the nearest obstacle boundary.
struct VisitReport {
  std::size_t expert_poses = 0;
  std::size_t rl_poses = 0;
  double expert_near_fraction = 0.0;  // |distance| <= near_threshold
  double rl_near_fraction = 0.0;
  double near_threshold = 0.01;
};
VisitReport run_visitlog(const ExperimentConfig& cfg);

// bc / dagger protocols; validation evaluated once on the best snapshot.
struct ImitationReport {
  double best_test = -1.0;
  double validation_success = -1.0;
  int corpus_episodes = 0;
  std::size_t corpus_samples = 0;
  double wall_seconds = 0.0;
};
ImitationReport run_bc(const ExperimentConfig& cfg);
ImitationReport run_dagger(const ExperimentConfig& cfg);

// Keeps large Eigen temporaries on the heap instead of per-call mmap;
// roughly halves dense update time on glibc. Call once at startup.
void tune_allocator();

// Shared helpers.
Actor<Real> load_actor(const std::string& checkpoint_path,
                       const ExperimentConfig& cfg);
double signed_obstacle_distance(const std::vector<BoxObstacle>& obstacles,
                                const Vec2& p);
void ensure_dir(const std::string& dir);

}  // namespace nmp
