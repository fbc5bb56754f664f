#include "nmp/imitation.hpp"

#include <filesystem>

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

BcConfig quick_bc() {
  BcConfig cfg;
  cfg.epochs = 10;
  cfg.batch_size = 256;
  cfg.arch = {2, 24, 1.0};
  cfg.horizon = 80;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST_CASE("cosine loss on unit directions") {
  Vec a = (Vec(3) << 1.0, 0.0, 0.0).finished();
  Vec b = (Vec(3) << -1.0, 0.0, 0.0).finished();
  Vec c = (Vec(3) << 0.0, 1.0, 0.0).finished();
  CHECK(cosine_loss(a, a) == 0.0);
  CHECK(cosine_loss(a, b) == 2.0);
  CHECK(cosine_loss(a, c) == 1.0);
  CHECK_THROWS_AS(cosine_loss(2.0 * a, c), std::invalid_argument);
  CHECK_THROWS_AS(cosine_loss(a, Vec::Zero(3)), std::invalid_argument);
}

TEST_CASE("built corpora have unit directions and collision-free states") {
  const ArmModel arm = ArmModel::default_arm();
  const auto workspaces =
      sample_workspaces(make_simple_scenario(), arm, 10, 50);
  CorpusBuildStats stats;
  const DemoCorpus corpus =
      build_corpus(workspaces, arm, 1, {}, 51, &stats);
  CHECK(stats.planned >= 9);
  REQUIRE(!corpus.samples.empty());
  for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
    const auto& s = corpus.samples[i];
    CHECK(std::abs(s.direction.norm() - 1.0) <= 1e-9);
    if (i % 17 == 0) {
      CHECK(collision_free(arm, workspaces[s.episode], s.config));
    }
  }
  CHECK(corpus.episode_count() == stats.planned);
}

TEST_CASE("corpus files round trip with inferred episode boundaries") {
  const ArmModel arm = ArmModel::default_arm();
  const auto workspaces =
      sample_workspaces(make_simple_scenario(), arm, 5, 52);
  const DemoCorpus corpus = build_corpus(workspaces, arm, 1, {}, 53);
  const auto path =
      (std::filesystem::temp_directory_path() / "nmp_corpus.nmpd").string();
  save_corpus(corpus, path);
  const DemoCorpus loaded = load_corpus(path);
  REQUIRE(loaded.samples.size() == corpus.samples.size());
  for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
    // 9 significant digits: ~5e-9 absolute at radian scale.
    CHECK((loaded.samples[i].config - corpus.samples[i].config)
              .lpNorm<Eigen::Infinity>() < 5e-8);
    CHECK(loaded.samples[i].episode == corpus.samples[i].episode);
  }
  CHECK(loaded.episode_count() == corpus.episode_count());

  const DemoCorpus head = corpus.first_episodes(2);
  for (const auto& s : head.samples) CHECK(s.episode < 2);
  CHECK(head.samples.size() < corpus.samples.size());
}

TEST_CASE("bc memorizes a single sample") {
  const ArmModel arm = ArmModel::default_arm();
  DemoCorpus corpus;
  DemoSample s;
  const Workspace ws = sample_workspaces(make_simple_scenario(), arm, 1, 54)[0];
  s.context = make_context(ws, 1);
  s.config = ws.start;
  s.direction = Vec::Unit(4, 1);
  s.episode = 0;
  corpus.samples.push_back(s);

  BcConfig cfg = quick_bc();
  cfg.epochs = 300;
  const BcResult result = bc_train<double>(corpus, cfg, arm, 1, {});
  REQUIRE(!result.epoch_losses.empty());
  CHECK(result.epoch_losses.back() < 0.05);
  CHECK(result.epoch_losses.back() < result.epoch_losses.front());
}

TEST_CASE("bc training is deterministic given the seed") {
  const ArmModel arm = ArmModel::default_arm();
  const auto workspaces =
      sample_workspaces(make_simple_scenario(), arm, 6, 55);
  const DemoCorpus corpus = build_corpus(workspaces, arm, 1, {}, 56);
  const auto test_ws = sample_workspaces(make_simple_scenario(), arm, 3, 57);

  BcConfig cfg = quick_bc();
  cfg.epochs = 3;
  const BcResult a = bc_train<float>(corpus, cfg, arm, 1, test_ws);
  const BcResult b = bc_train<float>(corpus, cfg, arm, 1, test_ws);
  REQUIRE(a.best_checkpoint.size() == b.best_checkpoint.size());
  for (std::size_t l = 0; l < a.best_checkpoint[0].net.weights.size(); ++l) {
    CHECK(a.best_checkpoint[0].net.weights[l] ==
          b.best_checkpoint[0].net.weights[l]);
  }
  CHECK(a.epoch_losses == b.epoch_losses);
}

TEST_CASE("bc loss gradient matches finite differences") {
  Rng rng(58);
  const int state_width = 9;
  const int dof = 3;
  Actor<double> actor = Actor<double>::random(state_width, dof, {1, 8, 1.0},
                                              rng);
  const MatX<double> input = MatX<double>::Random(state_width, 5);
  MatX<double> expert(dof, 5);
  for (int i = 0; i < 5; ++i) {
    expert.col(i) = VecX<double>::Random(dof).normalized();
  }

  auto loss = [&] {
    typename Actor<double>::Cache cache;
    const MatX<double> pred = actor.forward(input, &cache);
    double total = 0.0;
    for (int i = 0; i < 5; ++i) {
      total += 1.0 - pred.col(i).dot(expert.col(i));
    }
    return total / 5.0 + actor.preactivation_penalty(cache);
  };

  typename Actor<double>::Cache cache;
  actor.forward(input, &cache);
  const MatX<double> d_pred = -expert / 5.0;
  auto grads = Mlp<double>::Gradients::zero_like(actor.net);
  actor.backward(cache, d_pred, &grads);
  CHECK(testing::max_grad_rel_err(actor.net, grads, loss) < 1e-4);
}

TEST_CASE("dagger grows the corpus by at most five plans per failure") {
  const ArmModel arm = ArmModel::default_arm();
  const ScenarioSpec spec = make_simple_scenario();
  const auto train_ws = sample_workspaces(spec, arm, 6, 59);
  const auto test_ws = sample_workspaces(spec, arm, 3, 60);
  const DemoCorpus seed_corpus = build_corpus(train_ws, arm, 1, {}, 61);

  DaggerConfig cfg;
  cfg.bc = quick_bc();
  cfg.bc.epochs = 2;
  cfg.rounds = 2;
  cfg.episodes_per_round = 3;
  cfg.epochs_per_round = 1;

  const DaggerResult result =
      dagger_train<float>(seed_corpus, cfg, arm, 1, train_ws, test_ws);
  REQUIRE(result.corpus_sizes.size() == 3);  // seed + 2 rounds
  CHECK(result.corpus_sizes[0] == seed_corpus.samples.size());
  // Monotone growth, bounded by 5 expert plans per failed episode.
  for (std::size_t r = 1; r < result.corpus_sizes.size(); ++r) {
    CHECK(result.corpus_sizes[r] >= result.corpus_sizes[r - 1]);
  }
  CHECK(result.best_test >= 0.0);
}
