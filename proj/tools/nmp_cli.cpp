// nmp: neural motion planning lab. Subcommands generate workspace datasets,
// train the reward/transition models and the RL/IL policies, and run the
// evaluation, benchmark, and visitation diagnostics.

#include <Eigen/Core>
#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "nmp/harness.hpp"
#include "nmp/textio.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeFailure = 1;
constexpr int kConfigError = 2;

void apply_threads(int threads) {
  if (threads > 0) Eigen::setNbThreads(threads);
}

int cmd_gen(const std::string& spec_path, const std::string& out_dir) {
  const nmp::ScenarioSpec spec = nmp::load_scenario(spec_path);
  nmp::generate_dataset_dir(spec, nmp::ArmModel::default_arm(), out_dir);
  std::printf("dataset '%s' written to %s (train=%d test=%d validation=%d)\n",
              spec.name.c_str(), out_dir.c_str(), spec.train_count,
              spec.test_count, spec.validation_count);
  return kOk;
}

int cmd_train_surrogates(const std::string& config_path) {
  const nmp::ExperimentConfig cfg = nmp::load_config(config_path);
  apply_threads(cfg.threads);
  const nmp::SurrogateReport report = nmp::train_surrogates_to_file(cfg);
  std::printf(
      "surrogates -> %s (balanced accuracy %.4f @ epoch %d, reward mse "
      "%.2e, %.1fs)\n",
      cfg.surrogate_checkpoint_path().c_str(),
      report.classifier_balanced_accuracy, report.classifier_best_epoch,
      report.regressor_mse, report.wall_seconds);
  return kOk;
}

int cmd_train(const std::string& config_path, bool train_surrogates) {
  const nmp::ExperimentConfig cfg = nmp::load_config(config_path);
  apply_threads(cfg.threads);
  const nmp::RunReport report = nmp::run_training(cfg, train_surrogates);
  std::printf(
      "%s: best test %.4f @ iteration %d, validation %.4f "
      "(%ld episodes, %.1fs)\n",
      report.variant.c_str(), report.best_test, report.best_iteration,
      report.validation_success, report.episodes_seen,
      report.wall_seconds_train);
  return kOk;
}

int cmd_eval(const std::string& config_path, const std::string& checkpoint,
             const std::string& split) {
  const nmp::ExperimentConfig cfg = nmp::load_config(config_path);
  apply_threads(cfg.threads);
  const double success = nmp::run_eval(cfg, checkpoint, split);
  std::printf("%s success rate: %.4f\n", split.c_str(), success);
  return kOk;
}

int cmd_bench(const std::string& config_path, const std::string& checkpoint,
              int count) {
  const nmp::ExperimentConfig cfg = nmp::load_config(config_path);
  apply_threads(cfg.threads);
  nmp::ensure_dir(cfg.output_dir);
  const nmp::BenchReport report = nmp::run_bench(
      cfg, checkpoint, count > 0 ? count : cfg.bench_count,
      cfg.output_dir + "/bench.csv");
  nmp::write_bench_report(report, cfg.output_dir + "/bench_report.txt");
  std::printf(
      "bench on %d workspaces: nmp %.2fs (%d/%d valid successes) vs rrt "
      "%.2fs -> %.2fx; hybrid %.2fs\n",
      report.count, report.nmp_total_seconds, report.nmp_successes,
      report.count, report.rrt_total_seconds, report.speedup(),
      report.hybrid_total_seconds);
  return kOk;
}

int cmd_visitlog(const std::string& config_path) {
  const nmp::ExperimentConfig cfg = nmp::load_config(config_path);
  apply_threads(cfg.threads);
  const nmp::VisitReport report = nmp::run_visitlog(cfg);
  std::printf(
      "visitation: rl near-boundary fraction %.4f (%zu poses) vs expert "
      "%.4f (%zu poses), threshold %.3f\n",
      report.rl_near_fraction, report.rl_poses, report.expert_near_fraction,
      report.expert_poses, report.near_threshold);
  return kOk;
}

int cmd_bc(const std::string& config_path) {
  const nmp::ExperimentConfig cfg = nmp::load_config(config_path);
  apply_threads(cfg.threads);
  const nmp::ImitationReport report = nmp::run_bc(cfg);
  std::printf("bc: best test %.4f, validation %.4f (%d episodes, %zu samples)\n",
              report.best_test, report.validation_success,
              report.corpus_episodes, report.corpus_samples);
  return kOk;
}

int cmd_dagger(const std::string& config_path) {
  const nmp::ExperimentConfig cfg = nmp::load_config(config_path);
  apply_threads(cfg.threads);
  const nmp::ImitationReport report = nmp::run_dagger(cfg);
  std::printf("dagger: best test %.4f, validation %.4f (%zu samples)\n",
              report.best_test, report.validation_success,
              report.corpus_samples);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  nmp::tune_allocator();
  CLI::App app{"neural motion planning lab"};
  app.require_subcommand(1);

  std::string spec_path, out_dir, config_path, checkpoint, split = "test";
  int count = 0;
  bool train_surrogates = false;

  auto* gen = app.add_subcommand("gen", "generate a workspace dataset");
  gen->add_option("spec", spec_path, "scenario spec file")->required();
  gen->add_option("out", out_dir, "output directory")->required();

  auto* tsur = app.add_subcommand("train-surrogates",
                                  "fit the reward and transition models");
  tsur->add_option("config", config_path, "experiment config")->required();

  auto* train = app.add_subcommand("train", "train a policy variant");
  train->add_option("config", config_path, "experiment config")->required();
  train->add_flag("--train-surrogates", train_surrogates,
                  "fit surrogates first when the checkpoint is missing");

  auto* eval = app.add_subcommand("eval", "evaluate a policy checkpoint");
  eval->add_option("config", config_path, "experiment config")->required();
  eval->add_option("--checkpoint", checkpoint, "policy checkpoint")
      ->required();
  eval->add_option("--split", split, "train|test|validation");

  auto* bench = app.add_subcommand("bench", "policy vs planner timing race");
  bench->add_option("config", config_path, "experiment config")->required();
  bench->add_option("--checkpoint", checkpoint, "policy checkpoint")
      ->required();
  bench->add_option("--count", count, "number of workspaces");

  auto* visit = app.add_subcommand("visitlog",
                                   "expert vs RL end-effector visitation");
  visit->add_option("config", config_path, "experiment config")->required();

  auto* bc = app.add_subcommand("bc", "behavioral cloning baseline");
  bc->add_option("config", config_path, "experiment config")->required();

  auto* dagger = app.add_subcommand("dagger", "corrective imitation baseline");
  dagger->add_option("config", config_path, "experiment config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (gen->parsed()) return cmd_gen(spec_path, out_dir);
    if (tsur->parsed()) return cmd_train_surrogates(config_path);
    if (train->parsed()) return cmd_train(config_path, train_surrogates);
    if (eval->parsed()) return cmd_eval(config_path, checkpoint, split);
    if (bench->parsed()) return cmd_bench(config_path, checkpoint, count);
    if (visit->parsed()) return cmd_visitlog(config_path);
    if (bc->parsed()) return cmd_bc(config_path);
    if (dagger->parsed()) return cmd_dagger(config_path);
  } catch (const nmp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const nmp::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kConfigError;
  } catch (const nmp::GenerationError& e) {
    std::cerr << "generation failed: " << e.what() << '\n';
    return kRuntimeFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kConfigError;
}
