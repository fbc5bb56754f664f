#include "nmp/harness.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "nmp/textio.hpp"

namespace nmp {

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string split_path(const std::string& dir, const char* split) {
  return dir + "/" + split + ".ws";
}

}  // namespace

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory " + dir);
}

void generate_dataset_dir(const ScenarioSpec& spec, const ArmModel& arm,
                          const std::string& out_dir) {
  ensure_dir(out_dir);
  const WorkspaceDataset ds = generate_dataset(spec, arm);
  save_scenario(spec, out_dir + "/scenario.spec");
  save_split(ds.train, "train", split_path(out_dir, "train"));
  save_split(ds.test, "test", split_path(out_dir, "test"));
  save_split(ds.validation, "validation", split_path(out_dir, "validation"));
  std::ofstream manifest(out_dir + "/manifest.txt");
  if (!manifest) throw std::runtime_error("cannot write manifest");
  manifest << "format=nmp-ws v1\n";
  manifest << "scenario=" << spec.name << '\n';
  manifest << "seed=" << spec.seed << '\n';
  manifest << "train=" << ds.train.size() << '\n';
  manifest << "test=" << ds.test.size() << '\n';
  manifest << "validation=" << ds.validation.size() << '\n';
  manifest << "context_slots=" << spec.context_slots << '\n';
}

LoadedDataset load_dataset_dir(const std::string& dir, bool with_validation) {
  LoadedDataset out;
  const std::string spec_path = dir + "/scenario.spec";
  if (!std::filesystem::exists(spec_path)) {
    throw ConfigError("missing scenario spec: " + spec_path +
                      " (run `nmp gen` first)");
  }
  out.spec = load_scenario(spec_path);
  for (const char* split : {"train", "test"}) {
    const std::string path = split_path(dir, split);
    if (!std::filesystem::exists(path)) {
      throw ConfigError("missing dataset split: " + path);
    }
  }
  out.train = load_split(split_path(dir, "train"));
  out.test = load_split(split_path(dir, "test"));
  if (with_validation) {
    const std::string path = split_path(dir, "validation");
    if (!std::filesystem::exists(path)) {
      throw ConfigError("missing dataset split: " + path);
    }
    out.validation = load_split(path);
  }
  return out;
}

SurrogateReport train_surrogates_to_file(const ExperimentConfig& cfg) {
  const auto start = Clock::now();
  const ArmModel arm = ArmModel::default_arm();
  const LoadedDataset ds = load_dataset_dir(cfg.dataset_dir, false);
  ClassifierTrainResult cls;
  double mse = 0.0;
  const Surrogates<Real> models =
      train_surrogates<Real>(ds.train, arm, ds.spec.context_slots,
                             cfg.surrogate_samples, cfg.surrogate_config(),
                             &cls, &mse);
  save_checkpoint(
      {{"transition-model", models.classifier.cast<double>()},
       {"reward-model", models.regressor.cast<double>()}},
      cfg.surrogate_checkpoint_path());
  SurrogateReport report;
  report.classifier_balanced_accuracy = cls.best_balanced_accuracy;
  report.classifier_best_epoch = cls.best_epoch;
  report.regressor_mse = mse;
  report.wall_seconds = seconds_since(start);
  return report;
}

Surrogates<Real> load_surrogates(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("missing surrogate checkpoint: " + path +
                      " (run `nmp train-surrogates` or pass "
                      "--train-surrogates)");
  }
  const auto nets = load_checkpoint(path);
  Surrogates<Real> models;
  models.classifier = find_network(nets, "transition-model").cast<Real>();
  models.regressor = find_network(nets, "reward-model").cast<Real>();
  return models;
}

Actor<Real> load_actor(const std::string& checkpoint_path,
                       const ExperimentConfig& cfg) {
  if (!std::filesystem::exists(checkpoint_path)) {
    throw ConfigError("missing checkpoint: " + checkpoint_path);
  }
  const auto nets = load_checkpoint(checkpoint_path);
  Actor<Real> actor;
  actor.net = find_network(nets, "actor").cast<Real>();
  actor.preactivation_l2 = cfg.actor_preact_l2;
  return actor;
}

RunReport run_training(const ExperimentConfig& cfg,
                       bool train_surrogates_if_missing) {
  const ArmModel arm = ArmModel::default_arm();
  ensure_dir(cfg.output_dir);
  const LoadedDataset ds = load_dataset_dir(cfg.dataset_dir, false);
  TrainerConfig tcfg = cfg.trainer_config();

  Surrogates<Real> models;
  const bool needs_models = variant_uses_model(tcfg.variant);
  if (needs_models) {
    const std::string path = cfg.surrogate_checkpoint_path();
    if (!std::filesystem::exists(path)) {
      if (!train_surrogates_if_missing) {
        throw ConfigError("missing surrogate checkpoint: " + path +
                          " (run `nmp train-surrogates` or pass "
                          "--train-surrogates)");
      }
      train_surrogates_to_file(cfg);
    }
    models = load_surrogates(path);
  }

  save_config(cfg, cfg.output_dir + "/config.nmpc");

  std::vector<Workspace> test_ws = ds.test;
  if (cfg.eval_test_size > 0 &&
      cfg.eval_test_size < static_cast<int>(test_ws.size())) {
    test_ws.resize(cfg.eval_test_size);
  }

  const auto start = Clock::now();
  Trainer<Real> trainer(tcfg, arm, ds.spec.context_slots,
                        needs_models ? &models : nullptr);
  const std::string state_dir = cfg.output_dir + "/state";
  if (tcfg.snapshot_every > 0) {
    ensure_dir(state_dir);
    if (std::filesystem::exists(state_dir + "/progress.txt")) {
      trainer.load_state(state_dir);
    }
  }
  std::ofstream log(cfg.output_dir + "/training_log.csv",
                    trainer.iteration() > 0 ? std::ios::app : std::ios::out);
  const TrainResult result = trainer.run(ds.train, test_ws, &log,
                                         tcfg.snapshot_every > 0 ? state_dir
                                                                 : "");
  RunReport report;
  report.variant = to_string(tcfg.variant);
  report.iterations = result.iterations;
  report.episodes_seen = result.episodes_seen;
  report.best_iteration = result.best_iteration;
  report.best_test = result.best_test;
  report.demos_injected = result.demos_injected_total;
  report.demo_planner_failures = result.demo_planner_failures;
  report.stopped_on_perfect = result.stopped_on_perfect;
  report.wall_seconds_train = seconds_since(start);

  save_checkpoint(result.best_checkpoint, cfg.output_dir + "/best.ckpt");
  save_checkpoint(trainer.bundle().to_checkpoint(),
                  cfg.output_dir + "/final.ckpt");

  // Validation: exactly once, on the best-test snapshot, on workspaces that
  // were never opened during training.
  const auto vstart = Clock::now();
  std::vector<Workspace> validation =
      load_split(split_path(cfg.dataset_dir, "validation"));
  if (cfg.eval_validation_size > 0 &&
      cfg.eval_validation_size < static_cast<int>(validation.size())) {
    validation.resize(cfg.eval_validation_size);
  }
  AgentBundle<Real> best = AgentBundle<Real>::from_checkpoint(
      result.best_checkpoint, cfg.actor_preact_l2);
  report.validation_success = evaluate(best.actor, arm, ds.spec.context_slots,
                                       tcfg.horizon, validation);
  report.wall_seconds_validation = seconds_since(vstart);

  write_run_report(report, cfg.output_dir + "/report.txt");
  return report;
}

void write_run_report(const RunReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "variant=" << report.variant << '\n';
  out << "iterations=" << report.iterations << '\n';
  out << "episodes_seen=" << report.episodes_seen << '\n';
  out << "best_iteration=" << report.best_iteration << '\n';
  out << "best_test=" << format_g9(report.best_test) << '\n';
  out << "validation_success=" << format_g9(report.validation_success) << '\n';
  out << "demos_injected=" << report.demos_injected << '\n';
  out << "demo_planner_failures=" << report.demo_planner_failures << '\n';
  out << "stopped_on_perfect=" << (report.stopped_on_perfect ? 1 : 0) << '\n';
  out << "wall_seconds_train=" << format_g9(report.wall_seconds_train) << '\n';
  out << "wall_seconds_validation="
      << format_g9(report.wall_seconds_validation) << '\n';
}

double run_eval(const ExperimentConfig& cfg, const std::string& checkpoint,
                const std::string& split) {
  const ArmModel arm = ArmModel::default_arm();
  if (split != "train" && split != "test" && split != "validation") {
    throw ConfigError("unknown split '" + split + "'");
  }
  const LoadedDataset ds = load_dataset_dir(cfg.dataset_dir, true);
  const std::vector<Workspace>* list = &ds.test;
  if (split == "train") list = &ds.train;
  if (split == "validation") list = &ds.validation;
  const Actor<Real> actor = load_actor(checkpoint, cfg);
  return evaluate(actor, arm, ds.spec.context_slots, cfg.horizon, *list);
}

BenchReport run_bench(const ExperimentConfig& cfg,
                      const std::string& checkpoint, int count,
                      const std::string& csv_path) {
  const ArmModel arm = ArmModel::default_arm();
  const LoadedDataset ds = load_dataset_dir(cfg.dataset_dir, true);
  if (ds.validation.empty()) throw ConfigError("empty validation split");
  const Actor<Real> actor = load_actor(checkpoint, cfg);

  std::vector<const Workspace*> queries;
  for (const auto& ws : ds.validation) {
    queries.push_back(&ws);
    if (static_cast<int>(queries.size()) >= count) break;
  }

  BenchReport report;
  report.count = static_cast<int>(queries.size());
  std::vector<double> nmp_times, rrt_times;
  std::ofstream csv;
  if (!csv_path.empty()) {
    csv.open(csv_path);
    csv << "workspace,nmp_seconds,nmp_success,nmp_valid,rrt_seconds,"
           "rrt_success,hybrid_seconds\n";
  }

  for (std::size_t i = 0; i < queries.size(); ++i) {
    const Workspace& ws = *queries[i];

    // Policy rollout, including the validity re-check (the planner's output
    // is valid by construction, so the check is part of the NMP cost).
    const auto n0 = Clock::now();
    auto [trajectory, rollout_success] = rollout_trajectory(
        actor, arm, ds.spec.context_slots, cfg.horizon, ws);
    const PlanCheck check = validate_plan(trajectory, ws, arm);
    const double nmp_seconds = seconds_since(n0);
    const bool nmp_success = rollout_success && check.valid;
    if (rollout_success && check.valid) ++report.nmp_validated;

    RrtParams params = cfg.rrt_params();
    params.seed = mix_seed(cfg.seed, 0xBE4CULL, i);
    const auto r0 = Clock::now();
    const auto plan = rrt_plan(ws, arm, params);
    const double rrt_seconds = seconds_since(r0);

    report.nmp_successes += nmp_success ? 1 : 0;
    report.rrt_successes += plan ? 1 : 0;
    report.nmp_total_seconds += nmp_seconds;
    report.rrt_total_seconds += rrt_seconds;
    const double hybrid = nmp_seconds + (nmp_success ? 0.0 : rrt_seconds);
    report.hybrid_total_seconds += hybrid;
    nmp_times.push_back(nmp_seconds);
    rrt_times.push_back(rrt_seconds);

    if (csv.is_open()) {
      csv << i << ',' << format_g9(nmp_seconds) << ',' << (nmp_success ? 1 : 0)
          << ',' << (check.valid ? 1 : 0) << ',' << format_g9(rrt_seconds)
          << ',' << (plan ? 1 : 0) << ',' << format_g9(hybrid) << '\n';
    }
  }

  auto median = [](std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
  };
  report.nmp_median_seconds = median(nmp_times);
  report.rrt_median_seconds = median(rrt_times);
  return report;
}

void write_bench_report(const BenchReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "count=" << report.count << '\n';
  out << "nmp_successes=" << report.nmp_successes << '\n';
  out << "nmp_validated=" << report.nmp_validated << '\n';
  out << "rrt_successes=" << report.rrt_successes << '\n';
  out << "nmp_total_seconds=" << format_g9(report.nmp_total_seconds) << '\n';
  out << "rrt_total_seconds=" << format_g9(report.rrt_total_seconds) << '\n';
  out << "hybrid_total_seconds=" << format_g9(report.hybrid_total_seconds)
      << '\n';
  out << "nmp_median_seconds=" << format_g9(report.nmp_median_seconds) << '\n';
  out << "rrt_median_seconds=" << format_g9(report.rrt_median_seconds) << '\n';
  out << "speedup=" << format_g9(report.speedup()) << '\n';
}

double signed_obstacle_distance(const std::vector<BoxObstacle>& obstacles,
                                const Vec2& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& box : obstacles) {
    const double d = box_boundary_distance(box, p);
    if (std::abs(d) < std::abs(best)) best = d;
  }
  return best;
}

namespace {

void write_visit_csv(const std::string& path,
                     const std::vector<VisitRecord>& records,
                     const std::vector<BoxObstacle>& obstacles) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "episode,step,ee_x,ee_z,class,obstacle_distance\n";
  for (const auto& r : records) {
    out << r.episode << ',' << r.step << ',' << format_g9(r.ee_x) << ','
        << format_g9(r.ee_z) << ',' << to_string(r.cls) << ','
        << format_g9(signed_obstacle_distance(obstacles, {r.ee_x, r.ee_z}))
        << '\n';
  }
}

double near_fraction(const std::vector<VisitRecord>& records,
                     const std::vector<BoxObstacle>& obstacles,
                     double threshold) {
  if (records.empty()) return 0.0;
  std::size_t near = 0;
  for (const auto& r : records) {
    if (std::abs(signed_obstacle_distance(obstacles, {r.ee_x, r.ee_z})) <=
        threshold) {
      ++near;
    }
  }
  return static_cast<double>(near) / static_cast<double>(records.size());
}

}  // namespace

VisitReport run_visitlog(const ExperimentConfig& cfg) {
  const ArmModel arm = ArmModel::default_arm();
  ensure_dir(cfg.output_dir);
  const LoadedDataset ds = load_dataset_dir(cfg.dataset_dir, false);
  // Both logs describe a fixed-obstacle scenario, so the obstacle list of
  // the first training workspace applies to every pose.
  const std::vector<BoxObstacle>& obstacles = ds.train.front().obstacles;

  // Expert targets: states of valid plans on training workspaces.
  std::vector<Workspace> expert_ws = ds.train;
  if (cfg.visit_expert_episodes > 0 &&
      cfg.visit_expert_episodes < static_cast<int>(expert_ws.size())) {
    expert_ws.resize(cfg.visit_expert_episodes);
  }
  CorpusBuildStats stats;
  const DemoCorpus corpus =
      build_corpus(expert_ws, arm, ds.spec.context_slots, cfg.rrt_params(),
                   mix_seed(cfg.seed, 0x7157ULL), &stats);
  std::vector<VisitRecord> expert_records;
  expert_records.reserve(corpus.samples.size());
  for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
    const auto& s = corpus.samples[i];
    const Vec2 ee = fk_ee(arm, s.config);
    expert_records.push_back({s.episode, static_cast<int>(i), ee.x(), ee.y(),
                              TransitionClass::kFree});
  }

  // Early RL exploration: train with visitation logging enabled.
  TrainerConfig tcfg = cfg.trainer_config();
  tcfg.variant = Variant::kDdpg;
  tcfg.episode_budget = cfg.visit_rl_episodes;
  tcfg.stop_on_perfect_test = false;
  Trainer<Real> trainer(tcfg, arm, ds.spec.context_slots, nullptr);
  VisitLog rl_log;
  trainer.set_visit_log(&rl_log);
  std::vector<Workspace> test_ws = ds.test;
  if (cfg.eval_test_size > 0 &&
      cfg.eval_test_size < static_cast<int>(test_ws.size())) {
    test_ws.resize(cfg.eval_test_size);
  }
  trainer.run(ds.train, test_ws, nullptr);

  write_visit_csv(cfg.output_dir + "/expert_visits.csv", expert_records,
                  obstacles);
  write_visit_csv(cfg.output_dir + "/rl_visits.csv", rl_log, obstacles);

  VisitReport report;
  report.expert_poses = expert_records.size();
  report.rl_poses = rl_log.size();
  report.expert_near_fraction =
      near_fraction(expert_records, obstacles, report.near_threshold);
  report.rl_near_fraction =
      near_fraction(rl_log, obstacles, report.near_threshold);
  std::ofstream summary(cfg.output_dir + "/visit_summary.txt");
  summary << "expert_poses=" << report.expert_poses << '\n';
  summary << "rl_poses=" << report.rl_poses << '\n';
  summary << "expert_near_fraction=" << format_g9(report.expert_near_fraction)
          << '\n';
  summary << "rl_near_fraction=" << format_g9(report.rl_near_fraction) << '\n';
  summary << "near_threshold=" << format_g9(report.near_threshold) << '\n';
  return report;
}

namespace {

ImitationReport finish_imitation(const ExperimentConfig& cfg,
                                 const std::vector<NamedNetwork>& best,
                                 double best_test, const std::string& tag) {
  const ArmModel arm = ArmModel::default_arm();
  const LoadedDataset ds = load_dataset_dir(cfg.dataset_dir, true);
  ImitationReport report;
  report.best_test = best_test;
  save_checkpoint(best, cfg.output_dir + "/" + tag + "_best.ckpt");
  Actor<Real> actor;
  actor.net = find_network(best, "actor").cast<Real>();
  actor.preactivation_l2 = cfg.actor_preact_l2;
  std::vector<Workspace> validation = ds.validation;
  if (cfg.eval_validation_size > 0 &&
      cfg.eval_validation_size < static_cast<int>(validation.size())) {
    validation.resize(cfg.eval_validation_size);
  }
  report.validation_success = evaluate(actor, arm, ds.spec.context_slots,
                                       cfg.horizon, validation);
  return report;
}

}  // namespace

ImitationReport run_bc(const ExperimentConfig& cfg) {
  const auto start = Clock::now();
  const ArmModel arm = ArmModel::default_arm();
  ensure_dir(cfg.output_dir);
  const LoadedDataset ds = load_dataset_dir(cfg.dataset_dir, false);

  DemoCorpus corpus;
  const std::string corpus_path = cfg.corpus_path();
  if (std::filesystem::exists(corpus_path)) {
    corpus = load_corpus(corpus_path);
  } else {
    // Fresh corpus workspaces drawn from the scenario distribution, away
    // from the dataset's seed range.
    ScenarioSpec corpus_spec = ds.spec;
    corpus_spec.seed = mix_seed(ds.spec.seed, 0xC03B05ULL);
    corpus_spec.train_count = cfg.corpus_episodes;
    corpus_spec.test_count = 0;
    corpus_spec.validation_count = 0;
    const WorkspaceDataset corpus_ws =
        generate_dataset(corpus_spec, arm);
    corpus = build_corpus(corpus_ws.train, arm, ds.spec.context_slots,
                          cfg.rrt_params(), mix_seed(cfg.seed, 0xC0B5ULL));
    save_corpus(corpus, corpus_path);
  }

  std::vector<Workspace> test_ws = ds.test;
  if (cfg.eval_test_size > 0 &&
      cfg.eval_test_size < static_cast<int>(test_ws.size())) {
    test_ws.resize(cfg.eval_test_size);
  }
  const BcResult result = bc_train<Real>(corpus, cfg.bc_config(), arm,
                                         ds.spec.context_slots, test_ws);

  std::ofstream curve(cfg.output_dir + "/bc_curve.csv");
  curve << "epoch,loss,test_success\n";
  for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
    curve << e << ',' << format_g9(result.epoch_losses[e]) << ','
          << format_g9(result.epoch_test_success[e]) << '\n';
  }

  ImitationReport report = finish_imitation(cfg, result.best_checkpoint,
                                            result.best_test, "bc");
  report.corpus_episodes = corpus.episode_count();
  report.corpus_samples = corpus.samples.size();
  report.wall_seconds = seconds_since(start);
  std::ofstream out(cfg.output_dir + "/bc_report.txt");
  out << "best_test=" << format_g9(report.best_test) << '\n';
  out << "validation_success=" << format_g9(report.validation_success) << '\n';
  out << "corpus_episodes=" << report.corpus_episodes << '\n';
  out << "corpus_samples=" << report.corpus_samples << '\n';
  out << "wall_seconds=" << format_g9(report.wall_seconds) << '\n';
  return report;
}

ImitationReport run_dagger(const ExperimentConfig& cfg) {
  const auto start = Clock::now();
  const ArmModel arm = ArmModel::default_arm();
  ensure_dir(cfg.output_dir);
  const LoadedDataset ds = load_dataset_dir(cfg.dataset_dir, false);

  const std::string corpus_path = cfg.corpus_path();
  if (!std::filesystem::exists(corpus_path)) {
    throw ConfigError("missing seed corpus: " + corpus_path +
                      " (run `nmp bc` first or point corpus_file at one)");
  }
  const DemoCorpus corpus = load_corpus(corpus_path);

  std::vector<Workspace> test_ws = ds.test;
  if (cfg.eval_test_size > 0 &&
      cfg.eval_test_size < static_cast<int>(test_ws.size())) {
    test_ws.resize(cfg.eval_test_size);
  }
  const DaggerResult result =
      dagger_train<Real>(corpus, cfg.dagger_config(), arm,
                         ds.spec.context_slots, ds.train, test_ws);

  ImitationReport report = finish_imitation(cfg, result.best_checkpoint,
                                            result.best_test, "dagger");
  report.corpus_episodes = corpus.episode_count();
  report.corpus_samples =
      result.corpus_sizes.empty() ? 0 : result.corpus_sizes.back();
  report.wall_seconds = seconds_since(start);
  std::ofstream out(cfg.output_dir + "/dagger_report.txt");
  out << "best_test=" << format_g9(report.best_test) << '\n';
  out << "validation_success=" << format_g9(report.validation_success) << '\n';
  out << "corpus_samples=" << report.corpus_samples << '\n';
  out << "planner_failures=" << result.planner_failures << '\n';
  out << "wall_seconds=" << format_g9(report.wall_seconds) << '\n';
  return report;
}

}  // namespace nmp
