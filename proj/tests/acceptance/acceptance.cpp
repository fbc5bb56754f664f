// Acceptance suite: one checkable criterion per entry, each printing a
// single PASS/FAIL line. Heavy experiment artifacts (datasets, surrogates,
// trained policies) are cached under the work directory, so criteria that
// share artifacts reuse them across invocations.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "nmp/harness.hpp"
#include "nmp/textio.hpp"

namespace fs = std::filesystem;
using namespace nmp;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

std::map<std::string, std::string> parse_kv(const std::string& path) {
  std::map<std::string, std::string> out;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto pos = line.find('=');
    if (pos != std::string::npos) {
      out[line.substr(0, pos)] = line.substr(pos + 1);
    }
  }
  return out;
}

double kv_num(const std::map<std::string, std::string>& kv,
              const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw std::runtime_error("report missing key " + key);
  return parse_double(it->second);
}

// Sampled central-difference check against analytic gradients.
double sampled_grad_check(Mlp<double>& net,
                          const Mlp<double>::Gradients& analytic,
                          const std::function<double()>& loss, int points,
                          Rng& rng) {
  double worst = 0.0;
  const double h = 1e-5;
  for (int p = 0; p < points; ++p) {
    const int layer = rng.uniform_int(static_cast<int>(net.weights.size()));
    double* param = nullptr;
    double analytic_grad = 0.0;
    if (rng.uniform() < 0.8) {
      const Eigen::Index i = rng.uniform_int(net.weights[layer].rows());
      const Eigen::Index j = rng.uniform_int(net.weights[layer].cols());
      param = &net.weights[layer](i, j);
      analytic_grad = analytic.d_w[layer](i, j);
    } else {
      const Eigen::Index i = rng.uniform_int(net.biases[layer].size());
      param = &net.biases[layer][i];
      analytic_grad = analytic.d_b[layer][i];
    }
    const double saved = *param;
    *param = saved + h;
    const double hi = loss();
    *param = saved - h;
    const double lo = loss();
    *param = saved;
    const double numeric = (hi - lo) / (2.0 * h);
    const double err =
        std::abs(analytic_grad - numeric) /
        std::max({1e-6, std::abs(analytic_grad), std::abs(numeric)});
    worst = std::max(worst, err);
  }
  return worst;
}

// ---- shared experiment artifacts ----

struct Lab {
  std::string workdir;
  ArmModel arm = ArmModel::default_arm();

  std::string scenario_dir(const std::string& scenario) const {
    return workdir + "/" + scenario;
  }
  std::string dataset_dir(const std::string& scenario) const {
    return scenario_dir(scenario) + "/dataset";
  }
  std::string surrogate_path(const std::string& scenario) const {
    return scenario_dir(scenario) + "/surrogates.ckpt";
  }

  ScenarioSpec scenario_spec(const std::string& scenario) const {
    if (scenario == "simple") return make_simple_scenario();
    if (scenario == "hard") return make_hard_scenario();
    throw std::logic_error("unknown scenario " + scenario);
  }

  ExperimentConfig base_config(const std::string& scenario) const {
    ExperimentConfig cfg;
    cfg.dataset_dir = dataset_dir(scenario);
    cfg.surrogate_checkpoint = surrogate_path(scenario);
    cfg.seed = 1;
    return cfg;
  }

  void ensure_dataset(const std::string& scenario) {
    const std::string dir = dataset_dir(scenario);
    if (fs::exists(dir + "/manifest.txt")) return;
    std::printf("  [build] %s dataset\n", scenario.c_str());
    std::fflush(stdout);
    generate_dataset_dir(scenario_spec(scenario), arm, dir);
  }

  // Trains the transition/reward models once per scenario; the simple
  // scenario must clear the balanced-accuracy property target.
  void ensure_surrogates(const std::string& scenario) {
    ensure_dataset(scenario);
    const std::string path = surrogate_path(scenario);
    const std::string report_path =
        scenario_dir(scenario) + "/surrogates_report.txt";
    if (fs::exists(path) && fs::exists(report_path)) return;
    std::printf("  [build] %s surrogates\n", scenario.c_str());
    std::fflush(stdout);
    ExperimentConfig cfg = base_config(scenario);
    const SurrogateReport report = train_surrogates_to_file(cfg);
    std::ofstream out(report_path);
    out << "balanced_accuracy="
        << format_g9(report.classifier_balanced_accuracy) << '\n';
    out << "regressor_mse=" << format_g9(report.regressor_mse) << '\n';
    out << "wall_seconds=" << format_g9(report.wall_seconds) << '\n';
    if (scenario == "simple" && report.classifier_balanced_accuracy < 0.95) {
      throw std::runtime_error(
          "transition classifier below the 0.95 balanced-accuracy target: " +
          fmt(report.classifier_balanced_accuracy));
    }
  }

  double surrogate_wall(const std::string& scenario) const {
    return kv_num(parse_kv(scenario_dir(scenario) + "/surrogates_report.txt"),
                  "wall_seconds");
  }

  // A cached training run; returns the parsed report.
  std::map<std::string, std::string> ensure_run(const std::string& scenario,
                                                const std::string& variant,
                                                long episode_budget,
                                                std::uint64_t seed) {
    ensure_dataset(scenario);
    if (variant_uses_model(variant_from_string(variant))) {
      ensure_surrogates(scenario);
    }
    const std::string run_dir = scenario_dir(scenario) + "/run_" + variant +
                                "_seed" + std::to_string(seed);
    const std::string report_path = run_dir + "/report.txt";
    if (!fs::exists(report_path)) {
      std::printf("  [train] %s %s seed %llu (budget %ld episodes)\n",
                  scenario.c_str(), variant.c_str(),
                  static_cast<unsigned long long>(seed), episode_budget);
      std::fflush(stdout);
      ExperimentConfig cfg = base_config(scenario);
      cfg.output_dir = run_dir;
      cfg.variant = variant;
      cfg.episode_budget = episode_budget;
      cfg.seed = seed;
      run_training(cfg);
    }
    return parse_kv(report_path);
  }
};

// Random workspaces mirroring the geometry-test distribution.
Workspace random_box_workspace(const ArmModel& arm, Rng& rng) {
  Workspace ws;
  ws.bounds = Bounds::around(arm);
  const int boxes = 1 + rng.uniform_int(3);
  for (int i = 0; i < boxes; ++i) {
    BoxObstacle box;
    box.center = {rng.uniform(-0.45, 0.45), rng.uniform(-0.45, 0.45)};
    box.half_extents = {rng.uniform(0.01, 0.1), rng.uniform(0.01, 0.1)};
    box.rotation = rng.uniform(-std::numbers::pi, std::numbers::pi);
    ws.obstacles.push_back(box);
  }
  ws.start = Vec::Zero(arm.dof());
  ws.goal = {rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4)};
  return ws;
}

bool oracle_point_in_box(const BoxObstacle& box, const Vec2& p) {
  const double cs = std::cos(box.rotation);
  const double sn = std::sin(box.rotation);
  const double dx = p.x() - box.center.x();
  const double dy = p.y() - box.center.y();
  const double lx = cs * dx + sn * dy;
  const double ly = -sn * dx + cs * dy;
  return std::abs(lx) < box.half_extents.x() &&
         std::abs(ly) < box.half_extents.y();
}

bool oracle_collision_free(const ArmModel& arm, const Workspace& ws,
                           const Configuration& c, int samples_per_link) {
  const FkResult fk = forward_kinematics(arm, c);
  for (Eigen::Index link = 0; link < c.size(); ++link) {
    const Vec2 a = fk.points.col(link);
    const Vec2 b = fk.points.col(link + 1);
    for (int s = 0; s <= samples_per_link; ++s) {
      const double t = static_cast<double>(s) / samples_per_link;
      const Vec2 p = a + t * (b - a);
      if (!ws.bounds.contains(p)) return false;
      for (const BoxObstacle& box : ws.obstacles) {
        if (oracle_point_in_box(box, p)) return false;
      }
    }
  }
  return true;
}

// Smallest |signed distance| from any link sample point to any box boundary;
// disagreements are legitimate only when this is at grid scale.
double boundary_margin(const ArmModel& arm, const Workspace& ws,
                       const Configuration& c) {
  const FkResult fk = forward_kinematics(arm, c);
  double margin = std::numeric_limits<double>::infinity();
  for (Eigen::Index link = 0; link < c.size(); ++link) {
    const Vec2 a = fk.points.col(link);
    const Vec2 b = fk.points.col(link + 1);
    for (int s = 0; s <= 200; ++s) {
      const Vec2 p = a + (static_cast<double>(s) / 200) * (b - a);
      for (const BoxObstacle& box : ws.obstacles) {
        margin = std::min(margin, std::abs(box_boundary_distance(box, p)));
      }
    }
  }
  return margin;
}

// ---- criteria ----

Outcome criterion_1(Lab&) {
  const ArmModel arm = ArmModel::default_arm();
  Rng rng(0xC1);
  const int pairs = 10000;
  int disagreements = 0;
  int non_grazing = 0;
  for (int i = 0; i < pairs; ++i) {
    const Workspace ws = random_box_workspace(arm, rng);
    const Configuration c = rng.uniform_vector(arm.joint_low, arm.joint_high);
    const bool fast = collision_free(arm, ws, c);
    const bool slow = oracle_collision_free(arm, ws, c, 10000);
    if (fast != slow) {
      ++disagreements;
      if (boundary_margin(arm, ws, c) > 1e-3) ++non_grazing;
    }
  }
  const bool pass = non_grazing == 0 && disagreements < pairs / 1000;
  return {pass, "collision_free vs dense point-sampling oracle: " +
                    std::to_string(disagreements) + "/" +
                    std::to_string(pairs) + " disagreements, " +
                    std::to_string(non_grazing) + " away from boundaries"};
}

Outcome criterion_2(Lab&) {
  const ArmModel arm = ArmModel::default_arm();
  const int dof = arm.dof();
  const int ctx = context_width(1);
  const int state_width = ctx + dof;

  // Full-size architectures, double precision.
  AgentBundle<double> b = AgentBundle<double>::random(
      state_width, dof, ActorArch{}, CriticArch{}, 0xC2);
  Rng srng(0xC2F);
  Surrogates<double> models;
  {
    std::vector<LayerSpec> cls;
    int in = ctx + 2 * dof;
    for (int l = 0; l < 4; ++l) {
      cls.push_back({in, 100, Activation::kElu, 1e-4});
      in = 100;
    }
    cls.push_back({in, 3, Activation::kSoftmax, 1e-4});
    models.classifier = Mlp<double>::random(cls, srng);
    models.regressor = Mlp<double>::random(
        {{ctx + 2 * dof + 3, 1, Activation::kLinear, 1e-4}}, srng);
  }

  // A small batch of live transitions.
  const ScenarioSpec spec = make_simple_scenario();
  Rng wrng(0xC2A);
  std::vector<Transition> pool;
  while (pool.size() < 8) {
    const Workspace ws = sample_workspace(spec, arm, wrng);
    Env env(arm, 1, 40);
    env.reset(ws);
    while (!env.done() && pool.size() < 8) {
      pool.push_back(env.step(wrng.unit_vector(dof)));
    }
  }
  std::vector<const Transition*> batch;
  for (const auto& t : pool) batch.push_back(&t);

  TrainerConfig cfg;
  Rng prng(0xC2B);
  double worst = 0.0;
  std::string worst_name = "none";
  auto record = [&](const char* name, double err) {
    if (err > worst) {
      worst = err;
      worst_name = name;
    }
  };

  {  // critic regression loss, 10 points in each stack
    const auto y = critic_targets(b, batch, cfg);
    auto tg = Mlp<double>::Gradients::zero_like(b.critic.trunk);
    auto hg = Mlp<double>::Gradients::zero_like(b.critic.head);
    critic_gradients(b, batch, y, &tg, &hg);
    auto loss = [&] { return critic_gradients(b, batch, y, nullptr, nullptr); };
    record("critic-trunk", sampled_grad_check(b.critic.trunk, tg, loss, 10,
                                              prng));
    record("critic-head", sampled_grad_check(b.critic.head, hg, loss, 10,
                                             prng));
  }
  {  // deterministic policy gradient objective
    auto g = Mlp<double>::Gradients::zero_like(b.actor.net);
    actor_gradients_ddpg(b, batch, &g);
    auto loss = [&] { return -actor_gradients_ddpg(b, batch, nullptr); };
    record("actor-dpg", sampled_grad_check(b.actor.net, g, loss, 10, prng));
  }
  for (const auto form : {ActorObjectiveForm::kNextStateLookahead,
                          ActorObjectiveForm::kCurrentStateSample}) {
    TrainerConfig mp_cfg;
    mp_cfg.actor_objective = form;
    auto g = Mlp<double>::Gradients::zero_like(b.actor.net);
    actor_gradients_mp(b, models, batch, mp_cfg, &g);
    auto loss = [&] {
      return -actor_gradients_mp(b, models, batch, mp_cfg, nullptr);
    };
    record(form == ActorObjectiveForm::kNextStateLookahead
               ? "actor-model-lookahead"
               : "actor-model-sampled",
           sampled_grad_check(b.actor.net, g, loss, 10, prng));
  }
  {  // transition classifier, cross-entropy
    const MatX<double> x = MatX<double>::Random(ctx + 2 * dof, 8);
    const std::vector<int> labels = {0, 1, 2, 0, 1, 2, 0, 1};
    auto ce = [&] {
      const MatX<double> p = models.classifier.forward(x);
      double total = 0.0;
      for (int i = 0; i < 8; ++i) total -= std::log(p(labels[i], i));
      return total / 8.0 + models.classifier.weight_decay_loss();
    };
    typename Mlp<double>::Cache cache;
    const MatX<double> p = models.classifier.forward(x, &cache);
    MatX<double> d_p = MatX<double>::Zero(3, 8);
    for (int i = 0; i < 8; ++i) {
      d_p(labels[i], i) = -1.0 / (8.0 * p(labels[i], i));
    }
    auto g = Mlp<double>::Gradients::zero_like(models.classifier);
    models.classifier.backward(cache, d_p, &g);
    record("transition-model",
           sampled_grad_check(models.classifier, g, ce, 10, prng));
  }
  {  // reward regressor, squared error
    const MatX<double> x = MatX<double>::Random(ctx + 2 * dof + 3, 8);
    const VecX<double> y = VecX<double>::Random(8);
    auto mse = [&] {
      const MatX<double> pred = models.regressor.forward(x);
      double total = 0.0;
      for (int i = 0; i < 8; ++i) {
        const double d = pred(0, i) - y[i];
        total += d * d;
      }
      return total / 8.0 + models.regressor.weight_decay_loss();
    };
    typename Mlp<double>::Cache cache;
    const MatX<double> pred = models.regressor.forward(x, &cache);
    MatX<double> d(1, 8);
    for (int i = 0; i < 8; ++i) d(0, i) = 2.0 * (pred(0, i) - y[i]) / 8.0;
    auto g = Mlp<double>::Gradients::zero_like(models.regressor);
    models.regressor.backward(cache, d, &g);
    record("reward-model",
           sampled_grad_check(models.regressor, g, mse, 10, prng));
  }

  return {worst < 1e-4, "max relative error " + fmt(worst, 8) + " (" +
                            worst_name + "), threshold 1e-4"};
}

Outcome criterion_3(Lab&) {
  const ArmModel arm = ArmModel::default_arm();
  Rng rng(0xC3);
  const ScenarioSpec simple = make_simple_scenario();
  const ScenarioSpec random_spec = make_random_scenario();
  long checked = 0;
  long mismatched = 0;
  while (checked < 10000) {
    const ScenarioSpec& spec = (checked % 2 == 0) ? simple : random_spec;
    const Workspace ws = sample_workspace(spec, arm, rng);
    Env env(arm, spec.context_slots, 120);
    env.reset(ws);
    while (!env.done() && checked < 10000) {
      const Vec action = rng.unit_vector(arm.dof());
      const Transition t = env.step(action);
      ++checked;
      const auto [reward, cls] =
          Env::known_reward(arm, t.context, t.c_from, t.c_to, t.action);
      bool ok = reward == t.reward && cls == t.cls;
      // Closed-form re-check per class.
      const Configuration raw = t.c_from + kMotionStepNorm * t.action;
      const double wasted =
          (raw - raw.cwiseMax(arm.joint_low).cwiseMin(arm.joint_high)).norm();
      switch (t.cls) {
        case TransitionClass::kFree:
          ok = ok && t.reward == -0.01 - 0.05 * wasted;
          break;
        case TransitionClass::kGoal:
          ok = ok && t.reward == 1.0;
          break;
        case TransitionClass::kCollision:
          ok = ok && t.reward == -1.0;
          break;
      }
      if (!ok) ++mismatched;
    }
  }
  return {mismatched == 0,
          std::to_string(checked) + " recorded transitions re-scored, " +
              std::to_string(mismatched) + " mismatches (bit-exact required)"};
}

Outcome criterion_4(Lab&) {
  const ArmModel arm = ArmModel::default_arm();
  const ScenarioSpec spec = make_simple_scenario();
  Rng rng(0xC4);
  int planned = 0;
  int attempts = 0;
  int invalid = 0;
  int replay_mismatches = 0;
  while (planned < 100 && attempts < 140) {
    ++attempts;
    const Workspace ws = sample_workspace(spec, arm, rng);
    RrtParams params;
    params.seed = rng.bits();
    const auto plan = rrt_plan(ws, arm, params);
    if (!plan) continue;
    ++planned;
    if (!validate_plan(*plan, ws, arm).valid) {
      ++invalid;
      continue;
    }
    const auto demo = score_demonstration(*plan, ws, arm, spec.context_slots);
    Env env(arm, spec.context_slots, 100000);
    env.reset(ws);
    for (const auto& t : demo) {
      const Transition replayed = env.step(t.action);
      if (replayed.reward != t.reward || replayed.cls != t.cls) {
        ++replay_mismatches;
      }
    }
  }
  const bool pass = planned == 100 && invalid == 0 && replay_mismatches == 0;
  return {pass, std::to_string(planned) + "/100 plans valid (in " +
                    std::to_string(attempts) + " attempts), " +
                    std::to_string(invalid) + " invalid, " +
                    std::to_string(replay_mismatches) +
                    " demonstration replay mismatches"};
}

Outcome criterion_5(Lab& lab) {
  lab.ensure_surrogates("simple");
  const auto mp = lab.ensure_run("simple", "ddpgmp_noexp", 20000, 1);
  const auto ddpg = lab.ensure_run("simple", "ddpg", 20000, 1);
  const double mp_val = kv_num(mp, "validation_success");
  const double ddpg_val = kv_num(ddpg, "validation_success");
  const double wall = kv_num(mp, "wall_seconds_train") +
                      kv_num(ddpg, "wall_seconds_train") +
                      lab.surrogate_wall("simple");
  const bool pass =
      (mp_val - ddpg_val >= 0.05) && (mp_val >= 0.85) && wall <= 7200.0;
  return {pass, "validation ddpgmp_noexp " + fmt(mp_val) + " vs ddpg " +
                    fmt(ddpg_val) + " (gap " + fmt(mp_val - ddpg_val) +
                    " >= 0.05, absolute >= 0.85), build time " +
                    fmt(wall / 3600.0, 2) + "h <= 2h"};
}

Outcome criterion_6(Lab& lab) {
  lab.ensure_surrogates("hard");
  const std::vector<std::string> variants = {"ddpgmp_full", "ddpgmp_noexp",
                                             "ddpg"};
  auto ordering_holds = [&](const std::vector<double>& v) {
    return v[0] - v[1] >= 0.05 && v[1] - v[2] >= 0.05 && v[0] >= 0.8;
  };

  std::vector<double> first_seed;
  double wall = lab.surrogate_wall("hard");
  for (const auto& variant : variants) {
    const auto report = lab.ensure_run("hard", variant, 40000, 1);
    first_seed.push_back(kv_num(report, "validation_success"));
    wall += kv_num(report, "wall_seconds_train");
  }
  std::vector<double> decided = first_seed;
  std::string note = "seed 1";
  if (!ordering_holds(first_seed)) {
    // A single seed broke the ordering: the 3-seed median decides.
    note = "3-seed median";
    decided.assign(3, 0.0);
    for (std::size_t v = 0; v < variants.size(); ++v) {
      std::vector<double> vals = {first_seed[v]};
      for (const std::uint64_t seed : {2ull, 3ull}) {
        const auto report = lab.ensure_run("hard", variants[v], 40000, seed);
        vals.push_back(kv_num(report, "validation_success"));
        wall += kv_num(report, "wall_seconds_train");
      }
      std::sort(vals.begin(), vals.end());
      decided[v] = vals[1];
    }
  }
  const bool pass = ordering_holds(decided) && wall <= 6 * 3600.0;
  return {pass, "validation ddpgmp_full " + fmt(decided[0]) +
                    " > ddpgmp_noexp " + fmt(decided[1]) + " > ddpg " +
                    fmt(decided[2]) + " (gaps >= 0.05, full >= 0.8, " + note +
                    "), build time " + fmt(wall / 3600.0, 2) + "h <= 6h"};
}

Outcome criterion_7(Lab& lab) {
  lab.ensure_dataset("simple");
  const auto mp = lab.ensure_run("simple", "ddpgmp_noexp", 20000, 1);
  const double mp_val = kv_num(mp, "validation_success");

  // One 8k-episode corpus, reused as prefixes for every size.
  const std::string corpus_path =
      lab.scenario_dir("simple") + "/corpus_8000.nmpd";
  if (!fs::exists(corpus_path)) {
    std::printf("  [build] 8000-episode expert corpus\n");
    std::fflush(stdout);
    ScenarioSpec corpus_spec = lab.scenario_spec("simple");
    corpus_spec.seed = mix_seed(corpus_spec.seed, 0xC07B05ULL);
    corpus_spec.train_count = 8000;
    corpus_spec.test_count = 0;
    corpus_spec.validation_count = 0;
    const WorkspaceDataset corpus_ws = generate_dataset(corpus_spec, lab.arm);
    ExperimentConfig cfg = lab.base_config("simple");
    const DemoCorpus corpus =
        build_corpus(corpus_ws.train, lab.arm, 1, cfg.rrt_params(),
                     mix_seed(cfg.seed, 0xC0B5ULL));
    save_corpus(corpus, corpus_path);
  }

  std::map<int, double> bc_validation;
  for (const int episodes : {1000, 2000, 4000, 8000}) {
    const std::string run_dir =
        lab.scenario_dir("simple") + "/bc_" + std::to_string(episodes);
    const std::string report_path = run_dir + "/bc_report.txt";
    if (!fs::exists(report_path)) {
      std::printf("  [train] bc with %d episodes\n", episodes);
      std::fflush(stdout);
      const DemoCorpus full = load_corpus(corpus_path);
      const DemoCorpus subset = full.first_episodes(episodes);
      const std::string subset_path = run_dir + "/corpus.nmpd";
      ensure_dir(run_dir);
      save_corpus(subset, subset_path);
      ExperimentConfig cfg = lab.base_config("simple");
      cfg.output_dir = run_dir;
      cfg.corpus_file = subset_path;
      run_bc(cfg);
    }
    bc_validation[episodes] =
        kv_num(parse_kv(report_path), "validation_success");
  }

  const double best_bc =
      std::max({bc_validation[1000], bc_validation[2000], bc_validation[4000],
                bc_validation[8000]});
  const double doubling_gain = bc_validation[8000] - bc_validation[4000];
  const bool pass = doubling_gain < 0.05 && (mp_val - best_bc >= 0.05);
  return {pass,
          "bc validation 1k/2k/4k/8k = " + fmt(bc_validation[1000]) + "/" +
              fmt(bc_validation[2000]) + "/" + fmt(bc_validation[4000]) + "/" +
              fmt(bc_validation[8000]) + "; doubling gain " +
              fmt(doubling_gain) + " < 0.05; best bc " + fmt(best_bc) +
              " below ddpgmp_noexp " + fmt(mp_val) + " by >= 0.05"};
}

Outcome criterion_8(Lab& lab) {
  lab.ensure_run("simple", "ddpgmp_noexp", 20000, 1);
  const std::string checkpoint =
      lab.scenario_dir("simple") + "/run_ddpgmp_noexp_seed1/best.ckpt";
  ExperimentConfig cfg = lab.base_config("simple");
  cfg.output_dir = lab.scenario_dir("simple") + "/bench";
  ensure_dir(cfg.output_dir);
  const BenchReport report =
      run_bench(cfg, checkpoint, 100, cfg.output_dir + "/bench.csv");
  write_bench_report(report, cfg.output_dir + "/bench_report.txt");
  const bool pass = report.nmp_total_seconds < report.rrt_total_seconds &&
                    report.speedup() >= 2.0 &&
                    report.nmp_validated == report.nmp_successes;
  return {pass, "policy " + fmt(report.nmp_total_seconds, 2) +
                    "s vs planner " + fmt(report.rrt_total_seconds, 2) +
                    "s on " + std::to_string(report.count) + " workspaces (" +
                    fmt(report.speedup(), 2) + "x >= 2x), " +
                    std::to_string(report.nmp_successes) +
                    " successes all independently validated"};
}

Outcome criterion_9(Lab&) {
  const ArmModel arm = ArmModel::default_arm();
  std::vector<std::string> failures;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };

  {  // replay FIFO
    ReplayBuffer buffer(50);
    for (int i = 0; i < 70; ++i) {
      Transition t;
      t.reward = i;
      buffer.push(std::move(t));
    }
    bool ok = buffer.size() == 50;
    for (int i = 0; i < 50 && ok; ++i) {
      ok = buffer.oldest(i).reward == 20.0 + i;
    }
    expect(ok, "replay FIFO");
  }
  {  // HER next-state relabeling yields GOAL
    const ScenarioSpec spec = make_simple_scenario();
    Rng rng(0xC9A);
    bool ok = true;
    int checked = 0;
    while (checked < 200) {
      const Workspace ws = sample_workspace(spec, arm, rng);
      Env env(arm, 1, 60);
      env.reset(ws);
      while (!env.done() && checked < 200) {
        const Transition t = env.step(rng.unit_vector(4));
        if (t.cls == TransitionClass::kCollision) continue;
        Rng hrng(checked);
        const auto relabeled = her_relabel({t}, 1, arm, hrng);
        ok = ok && relabeled.size() == 1 &&
             relabeled[0].cls == TransitionClass::kGoal &&
             relabeled[0].reward == 1.0;
        ++checked;
      }
    }
    expect(ok, "HER next-state GOAL guarantee");
  }
  {  // soft-update contraction
    Rng rng(0xC9B);
    Mlp<double> online =
        Mlp<double>::random({{4, 6, Activation::kElu, 0.0}}, rng);
    Mlp<double> target =
        Mlp<double>::random({{4, 6, Activation::kElu, 0.0}}, rng);
    bool ok = true;
    double prev = -1.0;
    for (int i = 0; i < 5; ++i) {
      const double dist = (target.weights[0] - online.weights[0]).norm();
      if (prev >= 0.0) ok = ok && std::abs(dist - 0.05 * prev) < 1e-9;
      prev = dist;
      soft_update(target, online, 0.95);
    }
    expect(ok, "soft-update contraction");
  }
  {  // densify idempotence
    Rng rng(0xC9C);
    bool ok = true;
    for (int trial = 0; trial < 30; ++trial) {
      Trajectory t;
      Vec c = rng.uniform_vector(Vec::Constant(4, -1.0), Vec::Constant(4, 1.0));
      t.configurations.push_back(c);
      for (int hop = 0; hop < 5; ++hop) {
        c += rng.unit_vector(4) * rng.uniform(0.0, 0.3);
        t.configurations.push_back(c);
      }
      const Trajectory once = densify(t);
      const Trajectory twice = densify(once);
      ok = ok && once.configurations.size() == twice.configurations.size();
      for (std::size_t i = 0; ok && i < once.configurations.size(); ++i) {
        ok = once.configurations[i] == twice.configurations[i];
      }
      for (std::size_t i = 0; ok && i + 1 < once.configurations.size(); ++i) {
        ok = (once.configurations[i + 1] - once.configurations[i]).norm() <=
             kMotionStepNorm + 1e-12;
      }
    }
    expect(ok, "densify idempotence");
  }
  {  // config round trip
    ExperimentConfig cfg;
    cfg.gamma = 0.991;
    cfg.seed = 31337;
    cfg.variant = "ddpgmp_her";
    const std::string text = serialize_config(cfg);
    expect(serialize_config(parse_config(text)) == text, "config round trip");
  }
  {  // dataset round trip
    ScenarioSpec spec = make_simple_scenario();
    spec.train_count = 5;
    spec.test_count = 2;
    spec.validation_count = 2;
    const WorkspaceDataset ds = generate_dataset(spec, arm);
    const std::string path =
        (fs::temp_directory_path() / "nmp_accept_ds.ws").string();
    save_dataset(ds, path);
    const WorkspaceDataset loaded = load_dataset(path);
    const std::string path2 =
        (fs::temp_directory_path() / "nmp_accept_ds2.ws").string();
    save_dataset(loaded, path2);
    std::ifstream a(path), b(path2);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    expect(loaded.train == ds.train && loaded.test == ds.test &&
               loaded.validation == ds.validation && sa.str() == sb.str(),
           "dataset round trip");
  }
  {  // checkpoint round trip
    Rng rng(0xC9D);
    Mlp<double> net = Mlp<double>::random(
        {{3, 5, Activation::kElu, 0.01}, {5, 2, Activation::kTanh, 0.0}}, rng);
    const std::string path =
        (fs::temp_directory_path() / "nmp_accept_ckpt.ckpt").string();
    save_checkpoint({{"net", net}}, path);
    const auto loaded = load_checkpoint(path);
    bool ok = loaded.size() == 1 && loaded[0].name == "net";
    for (int l = 0; ok && l < net.layer_count(); ++l) {
      ok = loaded[0].net.weights[l] == net.weights[l] &&
           loaded[0].net.biases[l] == net.biases[l];
    }
    expect(ok, "checkpoint round trip");
  }

  std::string detail =
      "replay FIFO, HER relabel, soft-update, densify, "
      "config/dataset/checkpoint round-trips (no network access)";
  if (!failures.empty()) {
    detail = "failed: ";
    for (const auto& f : failures) detail += f + "; ";
  }
  return {failures.empty(), detail};
}

Outcome criterion_10(Lab& lab) {
  lab.ensure_dataset("simple");
  ExperimentConfig cfg = lab.base_config("simple");
  cfg.output_dir = lab.scenario_dir("simple") + "/visitlog";
  cfg.visit_rl_episodes = 2000;
  cfg.visit_expert_episodes = 200;
  const std::string summary_path = cfg.output_dir + "/visit_summary.txt";
  if (!fs::exists(summary_path)) {
    std::printf("  [build] visitation logs (2000 RL episodes)\n");
    std::fflush(stdout);
    run_visitlog(cfg);
  }
  const auto kv = parse_kv(summary_path);
  const double rl = kv_num(kv, "rl_near_fraction");
  const double expert = kv_num(kv, "expert_near_fraction");
  return {rl > expert,
          "near-boundary visitation fraction: rl " + fmt(rl) + " > expert " +
              fmt(expert) + " (within 0.01 of an obstacle boundary)"};
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  std::vector<int> wanted;
  std::string workdir = "acceptance_work";
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      wanted.push_back(std::atoi(argv[++i]));
    } else if (arg == "--workdir" && i + 1 < argc) {
      workdir = argv[++i];
    } else if (arg == "--list") {
      std::printf("criteria 1..10\n");
      return 0;
    } else {
      std::fprintf(stderr,
                   "usage: nmp_acceptance [--criterion N]... [--workdir DIR]\n");
      return 2;
    }
  }
  if (wanted.empty()) {
    for (int i = 1; i <= 10; ++i) wanted.push_back(i);
  }

  Lab lab;
  lab.workdir = workdir;
  ensure_dir(workdir);

  using CriterionFn = Outcome (*)(Lab&);
  const CriterionFn criteria[] = {criterion_1, criterion_2, criterion_3,
                                  criterion_4, criterion_5, criterion_6,
                                  criterion_7, criterion_8, criterion_9,
                                  criterion_10};

  bool all_pass = true;
  for (const int n : wanted) {
    if (n < 1 || n > 10) {
      std::fprintf(stderr, "no criterion %d\n", n);
      return 2;
    }
    const auto start = Clock::now();
    Outcome outcome;
    try {
      outcome = criteria[n - 1](lab);
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %2d: %s  %s  [%.1fs]\n", n,
                outcome.pass ? "PASS" : "FAIL", outcome.detail.c_str(),
                seconds_since(start));
    std::fflush(stdout);
    all_pass = all_pass && outcome.pass;
  }
  return all_pass ? 0 : 1;
}
