#include "nmp/surrogates.hpp"

#include "doctest.h"
#include "nmp/workspace.hpp"
#include "oracles.hpp"

using namespace nmp;

namespace {

std::vector<Workspace> sample_workspaces(const ScenarioSpec& spec,
                                         const ArmModel& arm, int n,
                                         std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Workspace> out;
  for (int i = 0; i < n; ++i) out.push_back(sample_workspace(spec, arm, rng));
  return out;
}

SurrogateTrainConfig quick_config() {
  SurrogateTrainConfig cfg;
  cfg.epochs = 12;
  cfg.batch_size = 4096;
  cfg.seed = 71;
  return cfg;
}

}  // namespace

TEST_CASE("labeled transitions agree with the known reward function") {
  const ArmModel arm = ArmModel::default_arm();
  const auto workspaces =
      sample_workspaces(make_simple_scenario(), arm, 20, 1);
  Rng rng(2);
  const auto data = generate_labeled_transitions(workspaces, arm, 1, 1000, rng);
  REQUIRE(data.size() == 1000);
  for (std::size_t i = 0; i < data.size(); i += 7) {
    const auto& row = data[i];
    const Configuration c_next =
        (row.config + kMotionStepNorm * row.action)
            .cwiseMax(arm.joint_low)
            .cwiseMin(arm.joint_high);
    const auto [reward, cls] =
        Env::known_reward(arm, row.context, row.config, c_next, row.action);
    CHECK(row.reward == reward);
    CHECK(row.cls == cls);
  }
}

TEST_CASE("obstacle-free workspace far from goal yields only FREE labels") {
  ArmModel arm = ArmModel::default_arm();
  Workspace ws;
  ws.bounds = Bounds::around(arm);
  ws.start = Vec::Zero(4);
  ws.goal = {0.54, 0.54};  // corner of the work area, out of reach
  Rng rng(3);
  const auto data = generate_labeled_transitions({ws}, arm, 1, 500, rng);
  for (const auto& row : data) {
    CHECK(row.cls == TransitionClass::kFree);
    CHECK(row.reward <= -0.01);
  }
}

TEST_CASE("free transitions dominate random scenario data") {
  const ArmModel arm = ArmModel::default_arm();
  const auto workspaces =
      sample_workspaces(make_random_scenario(), arm, 30, 4);
  Rng rng(5);
  const auto data =
      generate_labeled_transitions(workspaces, arm, 3, 5000, rng);
  const auto counts = class_counts(data);
  const double free_share =
      static_cast<double>(counts[kClassFree]) / data.size();
  CHECK(free_share > 0.9);
}

TEST_CASE("balanced batcher: counts differ by at most one, majority kept") {
  const ArmModel arm = ArmModel::default_arm();
  const auto workspaces =
      sample_workspaces(make_simple_scenario(), arm, 20, 6);
  Rng rng(7);
  const auto data =
      generate_labeled_transitions(workspaces, arm, 1, 4000, rng);
  std::vector<int> idx(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) idx[i] = static_cast<int>(i);
  detail::BalancedBatcher batcher(data, idx, 300);
  REQUIRE(batcher.all_present());

  Rng brng(8);
  batcher.start_epoch(brng);
  std::vector<char> seen(data.size(), 0);
  const int batches = batcher.batches_per_epoch();
  for (int b = 0; b < batches; ++b) {
    const auto batch = batcher.next_batch(brng);
    CHECK(batch.size() == 300);
    std::array<int, 3> counts = {0, 0, 0};
    for (int i : batch) {
      ++counts[class_index(data[i].cls)];
      seen[i] = 1;
    }
    const int mx = std::max({counts[0], counts[1], counts[2]});
    const int mn = std::min({counts[0], counts[1], counts[2]});
    CHECK(mx - mn <= 1);
  }
  // The majority class pool is fully consumed each epoch.
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].cls == TransitionClass::kFree) CHECK(seen[i] == 1);
  }
}

TEST_CASE("surrogate stack trained on the simple analogue") {
  // Scaled-down run (the full 600k-sample default is exercised by the
  // acceptance suite, where balanced accuracy must clear 0.95).
  const ArmModel arm = ArmModel::default_arm();
  const ScenarioSpec spec = make_simple_scenario();
  const auto workspaces = sample_workspaces(spec, arm, 100, 10);
  Rng rng(11);
  const auto data = generate_labeled_transitions(workspaces, arm,
                                                 spec.context_slots, 150000,
                                                 rng);
  SurrogateTrainConfig cfg = quick_config();
  cfg.epochs = 25;
  cfg.batch_size = 10000;
  ClassifierTrainResult result;
  const Mlp<float> classifier =
      train_transition_classifier<float>(data, cfg, &result);
  // The trivial always-FREE predictor scores 1/3 balanced accuracy.
  CHECK(result.best_balanced_accuracy > 1.0 / 3.0);
  CHECK(result.best_balanced_accuracy >= 0.85);

  const Mlp<float> regressor =
      train_reward_regressor<float>(data, classifier, cfg);
  Surrogates<float> models{classifier, regressor, false};

  int confident = 0, close = 0;
  for (std::size_t i = 0; i < data.size(); i += 11) {
    const auto& row = data[i];
    MatX<float> in(row.context.size() + 8, 1);
    in.col(0).head(row.context.size()) = row.context.cast<float>();
    in.col(0).segment(row.context.size(), 4) = row.config.cast<float>();
    in.col(0).tail(4) = row.action.cast<float>();
    const auto out = models.forward(in);
    if (out.probs.col(0).maxCoeff() > 0.99f) {
      ++confident;
      if (std::abs(static_cast<double>(out.reward(0, 0)) - row.reward) < 0.05) {
        ++close;
      }
    }
  }
  REQUIRE(confident > 100);
  CHECK(static_cast<double>(close) / confident >= 0.95);

  // A pose on the far side from the obstacle, far from the goal, with a
  // sideways action: confidently free.
  Vec config = Vec::Zero(4);
  config[0] = -1.2;
  REQUIRE(collision_free(arm, workspaces[0], config));
  Vec action = Vec::Zero(4);
  action[1] = 1.0;
  CHECK(free_probability(models, make_context(workspaces[0], 1), config,
                         action) > 0.9);
}

TEST_CASE("classifier training fails when a class is missing") {
  const ArmModel arm = ArmModel::default_arm();
  Workspace ws;
  ws.bounds = Bounds::around(arm);
  ws.start = Vec::Zero(4);
  ws.goal = {0.54, 0.54};
  Rng rng(9);
  const auto data = generate_labeled_transitions({ws}, arm, 1, 200, rng);
  CHECK_THROWS_AS(train_transition_classifier<float>(data, quick_config()),
                  std::runtime_error);
}



TEST_CASE("surrogate gradients match finite differences") {
  // Tiny double-precision stack: the chain through the regressor, softmax
  // probabilities, and classifier must be exact.
  Rng rng(16);
  const int ctx = 4, dof = 3;
  const int in_width = ctx + 2 * dof;
  Surrogates<double> models;
  models.classifier = Mlp<double>::random({{in_width, 12, Activation::kElu, 0.0},
                                           {12, 3, Activation::kSoftmax, 0.0}},
                                          rng);
  models.regressor = Mlp<double>::random(
      {{in_width + 3, 1, Activation::kLinear, 0.0}}, rng);

  for (const bool two_logit : {false, true}) {
    models.two_logit_free = two_logit;
    MatX<double> input = MatX<double>::Random(in_width, 1);

    auto value = [&] {
      const auto out = models.forward(input);
      return 2.0 * static_cast<double>(out.reward(0, 0)) +
             0.7 * static_cast<double>(out.p_free(0, 0));
    };
    typename Surrogates<double>::Cache cache;
    const auto out = models.forward(input, &cache);
    Eigen::Matrix<double, 1, Eigen::Dynamic> d_r(1, 1), d_p(1, 1);
    d_r(0, 0) = 2.0;
    d_p(0, 0) = 0.7;
    const MatX<double> d_in = models.backward(cache, out, d_r, d_p);

    for (int i = 0; i < in_width; ++i) {
      const double saved = input(i, 0);
      input(i, 0) = saved + 1e-6;
      const double hi = value();
      input(i, 0) = saved - 1e-6;
      const double lo = value();
      input(i, 0) = saved;
      const double numeric = (hi - lo) / 2e-6;
      CHECK(testing::rel_err(d_in(i, 0), numeric) < 1e-4);
    }
  }
}

TEST_CASE("free probability stays in (0,1) under both conventions") {
  Rng rng(17);
  const int in_width = 7 + 8;
  Surrogates<double> models;
  models.classifier = Mlp<double>::random({{in_width, 10, Activation::kElu, 0.0},
                                           {10, 3, Activation::kSoftmax, 0.0}},
                                          rng);
  models.regressor = Mlp<double>::random(
      {{in_width + 3, 1, Activation::kLinear, 0.0}}, rng);
  for (int i = 0; i < 100; ++i) {
    const MatX<double> in = MatX<double>::Random(in_width, 1) * 5.0;
    for (const bool two_logit : {false, true}) {
      models.two_logit_free = two_logit;
      const auto out = models.forward(in);
      CHECK(out.p_free(0, 0) > 0.0);
      CHECK(out.p_free(0, 0) < 1.0);
    }
  }
}


TEST_CASE("regressor converges to the step penalty on free-only data") {
  ArmModel arm = ArmModel::default_arm();
  Workspace ws;
  ws.bounds = Bounds::around(arm);
  ws.start = Vec::Zero(4);
  ws.goal = {0.54, 0.54};
  Rng rng(14);
  auto data = generate_labeled_transitions({ws}, arm, 1, 3000, rng);
  // Keep only in-limit samples so the target is the constant -0.01.
  std::erase_if(data,
                [](const LabeledTransition& t) { return t.reward < -0.011; });
  SurrogateTrainConfig cfg = quick_config();
  Rng init(15);
  Mlp<float> classifier = Mlp<float>::random(
      {{static_cast<int>(data[0].context.size()) + 8, 3,
        Activation::kSoftmax, 0.0}},
      init);
  const Mlp<float> regressor =
      train_reward_regressor<float>(data, classifier, cfg);
  Surrogates<float> models{classifier, regressor, false};
  const double pred = surrogate_reward(models, data[0].context,
                                       data[0].config, data[0].action);
  CHECK(pred == doctest::Approx(-0.01).epsilon(0.5));
}
