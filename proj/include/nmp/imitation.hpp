#pragma once

#include <string>
#include <vector>

#include "nmp/agent.hpp"
#include "nmp/planner.hpp"
#include "nmp/trainer.hpp"

namespace nmp {

struct DemoSample {
  Vec context;
  Configuration config;
  Vec direction;  // unit
  int episode = 0;
  std::string provenance = "seeded";
};

struct DemoCorpus {
  std::vector<DemoSample> samples;

  int episode_count() const {
    int max_ep = -1;
    for (const auto& s : samples) max_ep = std::max(max_ep, s.episode);
    return max_ep + 1;
  }

  // Samples belonging to the first n episodes (for corpus-size sweeps).
  DemoCorpus first_episodes(int n) const;
};

// 1 - dot(predicted, expert); throws unless both are unit vectors.
double cosine_loss(const Vec& predicted, const Vec& expert);

// Expert samples from valid densified plans: direction_i is the normalized
// waypoint difference. Workspaces that the planner fails on are skipped.
struct CorpusBuildStats {
  int planned = 0;
  int planner_failures = 0;
};
DemoCorpus build_corpus(const std::vector<Workspace>& workspaces,
                        const ArmModel& arm, int context_slots,
                        const RrtParams& params, std::uint64_t seed,
                        CorpusBuildStats* stats = nullptr);

void save_corpus(const DemoCorpus& corpus, const std::string& path);
DemoCorpus load_corpus(const std::string& path);

struct BcConfig {
  int epochs = 100;
  int batch_size = 512;
  OptimizerConfig opt{0.0001, 0.9, 0.999, 1e-8, 5.0};
  ActorArch arch;
  int horizon = kDefaultHorizon;
  int eval_every = 1;  // epochs between test-success evaluations
  std::uint64_t seed = 1;
};

struct BcResult {
  double best_test = -1.0;
  int best_epoch = -1;
  std::vector<NamedNetwork> best_checkpoint;  // network name "actor"
  std::vector<double> epoch_losses;
  std::vector<double> epoch_test_success;
};

// Behavioral cloning with the cosine-distance loss on unit directions (plus
// the actor's usual pre-tanh penalty); keeps the snapshot with the best test
// success.
template <class S>
BcResult bc_train(const DemoCorpus& corpus, const BcConfig& cfg,
                  const ArmModel& arm, int context_slots,
                  const std::vector<Workspace>& test_ws);

struct DaggerConfig {
  BcConfig bc;
  int rounds = 10;
  int episodes_per_round = 200;
  int epochs_per_round = 10;
  int expert_states_per_failure = 5;
  RrtParams rrt;
};

struct DaggerResult {
  double best_test = -1.0;
  int best_round = -1;
  std::vector<NamedNetwork> best_checkpoint;
  std::vector<std::size_t> corpus_sizes;  // per round, after aggregation
  int planner_failures = 0;
};

// Relaxed corrective imitation: per round, roll the current policy on
// training workspaces; for each failure request expert plans from the last
// few visited states to the goal, append the resulting samples, and keep
// training on the grown corpus.
template <class S>
DaggerResult dagger_train(DemoCorpus corpus, const DaggerConfig& cfg,
                          const ArmModel& arm, int context_slots,
                          const std::vector<Workspace>& train_ws,
                          const std::vector<Workspace>& test_ws);

// ---- implementation ----

namespace detail {

template <class S>
MatX<S> corpus_inputs(const DemoCorpus& corpus, const std::vector<int>& idx) {
  const auto& first = corpus.samples[idx[0]];
  const Eigen::Index ctx = first.context.size();
  const Eigen::Index dof = first.config.size();
  MatX<S> in(ctx + dof, static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& s = corpus.samples[idx[i]];
    const Eigen::Index j = static_cast<Eigen::Index>(i);
    in.col(j).head(ctx) = s.context.cast<S>();
    in.col(j).tail(dof) = s.config.cast<S>();
  }
  return in;
}

// Runs `epochs` passes of cosine-loss regression; returns per-epoch losses.
template <class S>
std::vector<double> bc_epochs(Actor<S>& actor, const DemoCorpus& corpus,
                              const BcConfig& cfg, int epochs, Rng& rng) {
  const int n = static_cast<int>(corpus.samples.size());
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::vector<double> losses;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (int i = n; i > 1; --i) {
      std::swap(idx[i - 1], idx[rng.uniform_int(i)]);
    }
    double epoch_loss = 0.0;
    int batches = 0;
    for (int at = 0; at < n; at += cfg.batch_size) {
      const int count = std::min(cfg.batch_size, n - at);
      std::vector<int> batch(idx.begin() + at, idx.begin() + at + count);
      const MatX<S> input = corpus_inputs<S>(corpus, batch);
      MatX<S> expert(corpus.samples[0].direction.size(), count);
      for (int i = 0; i < count; ++i) {
        expert.col(i) = corpus.samples[batch[i]].direction.cast<S>();
      }
      typename Actor<S>::Cache cache;
      const MatX<S> pred = actor.forward(input, &cache);
      double loss = 0.0;
      for (int i = 0; i < count; ++i) {
        loss += 1.0 - static_cast<double>(pred.col(i).dot(expert.col(i)));
      }
      loss = loss / count + actor.preactivation_penalty(cache);
      const MatX<S> d_pred = -expert / static_cast<S>(count);
      auto grads = Mlp<S>::Gradients::sized(actor.net);
      actor.backward(cache, d_pred, &grads);
      actor.net.adam_step(grads, cfg.opt);
      epoch_loss += loss;
      ++batches;
    }
    losses.push_back(batches ? epoch_loss / batches : 0.0);
  }
  return losses;
}

}  // namespace detail

template <class S>
BcResult bc_train(const DemoCorpus& corpus, const BcConfig& cfg,
                  const ArmModel& arm, int context_slots,
                  const std::vector<Workspace>& test_ws) {
  if (corpus.samples.empty()) throw std::invalid_argument("empty corpus");
  Rng rng(cfg.seed);
  const int dof = arm.dof();
  Actor<S> actor = Actor<S>::random(context_width(context_slots) + dof, dof,
                                    cfg.arch, rng);
  BcResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto losses = detail::bc_epochs(actor, corpus, cfg, 1, rng);
    result.epoch_losses.push_back(losses[0]);
    double success = -1.0;
    if (!test_ws.empty() && (epoch + 1) % cfg.eval_every == 0) {
      success = evaluate(actor, arm, context_slots, cfg.horizon, test_ws);
      if (success > result.best_test) {
        result.best_test = success;
        result.best_epoch = epoch;
        result.best_checkpoint = {
            {"actor", actor.net.template cast<double>()}};
      }
    }
    result.epoch_test_success.push_back(success);
  }
  if (result.best_checkpoint.empty()) {
    result.best_checkpoint = {{"actor", actor.net.template cast<double>()}};
  }
  return result;
}

template <class S>
DaggerResult dagger_train(DemoCorpus corpus, const DaggerConfig& cfg,
                          const ArmModel& arm, int context_slots,
                          const std::vector<Workspace>& train_ws,
                          const std::vector<Workspace>& test_ws) {
  if (corpus.samples.empty()) throw std::invalid_argument("empty seed corpus");
  if (train_ws.empty()) throw std::invalid_argument("empty train split");
  Rng rng(cfg.bc.seed);
  const int dof = arm.dof();
  Actor<S> actor = Actor<S>::random(context_width(context_slots) + dof, dof,
                                    cfg.bc.arch, rng);
  DaggerResult result;

  auto evaluate_round = [&](int round) {
    if (test_ws.empty()) return;
    const double success =
        evaluate(actor, arm, context_slots, cfg.bc.horizon, test_ws);
    if (success > result.best_test) {
      result.best_test = success;
      result.best_round = round;
      result.best_checkpoint = {{"actor", actor.net.template cast<double>()}};
    }
  };

  detail::bc_epochs(actor, corpus, cfg.bc, cfg.bc.epochs, rng);
  evaluate_round(0);
  result.corpus_sizes.push_back(corpus.samples.size());

  for (int round = 1; round <= cfg.rounds; ++round) {
    // Roll the current policy.
    Rng pick(mix_seed(cfg.bc.seed, 0xDA66ULL,
                      static_cast<std::uint64_t>(round)));
    std::vector<const Workspace*> picked(cfg.episodes_per_round);
    for (auto& slot : picked) {
      slot = &train_ws[pick.uniform_int(static_cast<int>(train_ws.size()))];
    }
    RolloutOptions opt;  // noise-free learner rollouts
    const auto episodes = rollout_episodes(actor, arm, context_slots,
                                           cfg.bc.horizon, picked, opt);

    // Expert corrections for the tail states of failed episodes.
    int next_episode = corpus.episode_count();
    for (std::size_t e = 0; e < episodes.size(); ++e) {
      if (episodes[e].success) continue;
      const auto& transitions = episodes[e].transitions;
      const Workspace& ws = *picked[e];
      std::vector<Configuration> visited;
      for (const auto& t : transitions) visited.push_back(t.c_from);
      if (!transitions.empty()) visited.push_back(transitions.back().c_to);
      const int take = std::min<int>(cfg.expert_states_per_failure,
                                     static_cast<int>(visited.size()));
      for (int s = 0; s < take; ++s) {
        const Configuration& from =
            visited[visited.size() - 1 - static_cast<std::size_t>(s)];
        if (!collision_free(arm, ws, from)) continue;
        Workspace query = ws;
        query.start = from;
        RrtParams params = cfg.rrt;
        params.seed = pick.bits();
        const auto plan = rrt_plan(query, arm, params);
        if (!plan) {
          ++result.planner_failures;
          continue;
        }
        const Vec context = make_context(ws, context_slots);
        for (std::size_t i = 0; i + 1 < plan->configurations.size(); ++i) {
          const Vec delta =
              plan->configurations[i + 1] - plan->configurations[i];
          const double norm = delta.norm();
          if (norm < 1e-12) continue;
          DemoSample sample;
          sample.context = context;
          sample.config = plan->configurations[i];
          sample.direction = delta / norm;
          sample.episode = next_episode;
          sample.provenance = "dagger-round-" + std::to_string(round);
          corpus.samples.push_back(std::move(sample));
        }
        ++next_episode;
      }
    }
    result.corpus_sizes.push_back(corpus.samples.size());

    detail::bc_epochs(actor, corpus, cfg.bc, cfg.epochs_per_round, rng);
    evaluate_round(round);
  }
  if (result.best_checkpoint.empty()) {
    result.best_checkpoint = {{"actor", actor.net.template cast<double>()}};
  }
  return result;
}

}  // namespace nmp
