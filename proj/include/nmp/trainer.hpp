#pragma once

#include <fstream>
#include <iostream>
#include <optional>

#include "nmp/agent.hpp"
#include "nmp/checkpoint.hpp"
#include "nmp/planner.hpp"
#include "nmp/replay.hpp"
#include "nmp/surrogates.hpp"

namespace nmp {

enum class Variant {
  kDdpg,
  kDdpgHer,
  kDdpgMpNoExpert,
  kDdpgMpHer,
  kDdpgMpFull,
};

Variant variant_from_string(const std::string& name);
const char* to_string(Variant v);

inline bool variant_uses_model(Variant v) {
  return v == Variant::kDdpgMpNoExpert || v == Variant::kDdpgMpHer ||
         v == Variant::kDdpgMpFull;
}
inline bool variant_uses_her(Variant v) {
  return v == Variant::kDdpgHer || v == Variant::kDdpgMpHer;
}
inline bool variant_uses_demos(Variant v) {
  return v == Variant::kDdpgMpFull;
}

struct ExplorationPolicy {
  double p_random = 0.2;
  double gaussian_std = 0.05;
};

// Demonstration-guided exploration needs far less random noise; everything
// else uses the default noisy policy.
inline ExplorationPolicy default_exploration(Variant v) {
  if (variant_uses_demos(v)) return {0.02, 0.005};
  return {0.2, 0.05};
}

// The two forms of the model-based actor objective: the lookahead form
// evaluates the critic at the predicted next state with the target actor's
// action there; the sampled form evaluates it at the current state.
enum class ActorObjectiveForm { kNextStateLookahead, kCurrentStateSample };

struct TrainerConfig {
  Variant variant = Variant::kDdpg;
  double gamma = 0.99;
  int batch_size = 512;
  int episodes_per_iteration = 16;
  int updates_per_iteration = 40;
  double tau = 0.95;
  int demo_cap = 8;
  int her_k = 4;
  int horizon = kDefaultHorizon;
  std::size_t replay_capacity = 1000000;
  OptimizerConfig actor_opt{0.001, 0.9, 0.999, 1e-8, 1.0};
  OptimizerConfig critic_opt{0.001, 0.9, 0.999, 1e-8, 1.0};
  ActorArch actor_arch;
  CriticArch critic_arch;
  // Negative entries mean "use the variant default".
  ExplorationPolicy exploration{-1.0, -1.0};
  long episode_budget = 20000;
  int eval_every = 1;
  bool stop_on_perfect_test = true;
  ActorObjectiveForm actor_objective = ActorObjectiveForm::kNextStateLookahead;
  RrtParams demo_rrt;
  std::uint64_t seed = 1;
  // Iterations between resumable state snapshots; 0 disables them.
  int snapshot_every = 0;

  ExplorationPolicy effective_exploration() const {
    ExplorationPolicy e = default_exploration(variant);
    if (exploration.p_random >= 0.0) e.p_random = exploration.p_random;
    if (exploration.gaussian_std >= 0.0) {
      e.gaussian_std = exploration.gaussian_std;
    }
    return e;
  }
};

template <class S>
struct AgentBundle {
  Actor<S> actor;
  Actor<S> actor_target;
  Critic<S> critic;
  Critic<S> critic_target;

  static AgentBundle random(int state_width, int dof, const ActorArch& aarch,
                            const CriticArch& carch, std::uint64_t seed) {
    AgentBundle b;
    Rng actor_rng(mix_seed(seed, 0x6163746fULL));
    Rng critic_rng(mix_seed(seed, 0x63726974ULL));
    b.actor = Actor<S>::random(state_width, dof, aarch, actor_rng);
    b.critic = Critic<S>::random(state_width, dof, carch, critic_rng);
    b.actor_target = b.actor;
    b.critic_target = b.critic;
    return b;
  }

  std::vector<NamedNetwork> to_checkpoint() const {
    return {{"actor", actor.net.template cast<double>()},
            {"actor-target", actor_target.net.template cast<double>()},
            {"critic-trunk", critic.trunk.template cast<double>()},
            {"critic-head", critic.head.template cast<double>()},
            {"critic-target-trunk",
             critic_target.trunk.template cast<double>()},
            {"critic-target-head", critic_target.head.template cast<double>()}};
  }

  static AgentBundle from_checkpoint(const std::vector<NamedNetwork>& nets,
                                     double preactivation_l2) {
    AgentBundle b;
    b.actor.net = find_network(nets, "actor").cast<S>();
    b.actor.preactivation_l2 = preactivation_l2;
    b.actor_target.net = find_network(nets, "actor-target").cast<S>();
    b.actor_target.preactivation_l2 = preactivation_l2;
    b.critic.trunk = find_network(nets, "critic-trunk").cast<S>();
    b.critic.head = find_network(nets, "critic-head").cast<S>();
    b.critic_target.trunk = find_network(nets, "critic-target-trunk").cast<S>();
    b.critic_target.head = find_network(nets, "critic-target-head").cast<S>();
    return b;
  }
};

// ---- rollouts ----

struct EpisodeResult {
  std::vector<Transition> transitions;
  bool success = false;
};

struct VisitRecord {
  int episode = 0;
  int step = 0;
  double ee_x = 0.0;
  double ee_z = 0.0;
  TransitionClass cls = TransitionClass::kFree;
};
using VisitLog = std::vector<VisitRecord>;

struct RolloutOptions {
  // Null: noise-free greedy rollouts (evaluation mode, no rng use).
  const ExplorationPolicy* exploration = nullptr;
  std::uint64_t seed_base = 0;
  VisitLog* visit = nullptr;
  int visit_episode_offset = 0;
};

// Runs every workspace to termination, stepping all live episodes in
// lockstep so the policy forward pass is batched. Episode e draws from its
// own stream seeded by (seed_base, e), so results do not depend on how
// episodes are interleaved. Policy is anything with a Scalar typedef and a
// batched forward() emitting unit directions (normally an Actor).
template <class Policy, class S = typename Policy::Scalar>
std::vector<EpisodeResult> rollout_episodes(
    const Policy& actor, const ArmModel& arm, int context_slots, int horizon,
    const std::vector<const Workspace*>& workspaces,
    const RolloutOptions& opt) {
  const std::size_t n = workspaces.size();
  std::vector<EpisodeResult> results(n);
  std::vector<Env> envs;
  envs.reserve(n);
  std::vector<Rng> rngs;
  rngs.reserve(n);
  for (std::size_t e = 0; e < n; ++e) {
    envs.emplace_back(arm, context_slots, horizon);
    envs.back().reset(*workspaces[e]);
    rngs.emplace_back(mix_seed(opt.seed_base, static_cast<std::uint64_t>(e)));
  }

  const int dof = arm.dof();
  std::vector<std::size_t> active(n);
  for (std::size_t e = 0; e < n; ++e) active[e] = e;

  std::vector<Vec> actions(n);
  std::vector<char> needs_policy(n, 0);
  while (!active.empty()) {
    // Pre-draw exploration decisions so each episode's stream is fixed.
    std::vector<std::size_t> policy_set;
    policy_set.reserve(active.size());
    for (std::size_t e : active) {
      if (opt.exploration && rngs[e].uniform() < opt.exploration->p_random) {
        actions[e] = rngs[e].unit_vector(dof);
        needs_policy[e] = 0;
      } else {
        needs_policy[e] = 1;
        policy_set.push_back(e);
      }
    }
    if (!policy_set.empty()) {
      MatX<S> input(context_width(context_slots) + dof,
                    static_cast<Eigen::Index>(policy_set.size()));
      for (std::size_t i = 0; i < policy_set.size(); ++i) {
        const State& s = envs[policy_set[i]].state();
        input.col(static_cast<Eigen::Index>(i)).head(s.context.size()) =
            s.context.cast<S>();
        input.col(static_cast<Eigen::Index>(i)).tail(dof) =
            s.config.cast<S>();
      }
      const MatX<S> unit = actor.forward(input);
      for (std::size_t i = 0; i < policy_set.size(); ++i) {
        const std::size_t e = policy_set[i];
        Vec a = unit.col(static_cast<Eigen::Index>(i)).template cast<double>();
        if (opt.exploration && opt.exploration->gaussian_std > 0.0) {
          for (int d = 0; d < dof; ++d) {
            a[d] += opt.exploration->gaussian_std * rngs[e].normal();
          }
        }
        const double norm = a.norm();
        actions[e] = norm < 1e-12 ? rngs[e].unit_vector(dof) : Vec(a / norm);
      }
    }

    std::vector<std::size_t> still_active;
    still_active.reserve(active.size());
    for (std::size_t e : active) {
      Env& env = envs[e];
      Transition t = env.step(actions[e]);
      if (opt.visit) {
        const Vec2 ee = fk_ee(arm, t.c_to);
        opt.visit->push_back({opt.visit_episode_offset + static_cast<int>(e),
                              env.steps_taken(), ee.x(), ee.y(), t.cls});
      }
      const bool done = t.done;
      const TransitionClass cls = t.cls;
      results[e].transitions.push_back(std::move(t));
      if (done) {
        results[e].success = cls == TransitionClass::kGoal;
      } else {
        still_active.push_back(e);
      }
    }
    active = std::move(still_active);
  }
  return results;
}

// Noise-free rollout of one workspace into a trajectory (for benchmarks).
template <class Policy, class S = typename Policy::Scalar>
std::pair<Trajectory, bool> rollout_trajectory(const Policy& actor,
                                               const ArmModel& arm,
                                               int context_slots, int horizon,
                                               const Workspace& ws) {
  Env env(arm, context_slots, horizon);
  State state = env.reset(ws);
  Trajectory t;
  t.configurations.push_back(state.config);
  bool success = false;
  while (!env.done()) {
    const MatX<S> input = state_input<S>(env.state());
    const MatX<S> unit = actor.forward(input);
    Vec a = unit.col(0).template cast<double>();
    const double norm = a.norm();
    if (norm > 0.0) a /= norm;
    const Transition tr = env.step(a);
    t.configurations.push_back(tr.c_to);
    if (tr.done) success = tr.cls == TransitionClass::kGoal;
  }
  t.valid = success;
  return {std::move(t), success};
}

// Noise-free success rate; throws on an empty workspace list.
template <class Policy>
double evaluate(const Policy& actor, const ArmModel& arm, int context_slots,
                int horizon, const std::vector<Workspace>& workspaces,
                VisitLog* visit = nullptr) {
  if (workspaces.empty()) {
    throw std::invalid_argument("evaluate needs at least one workspace");
  }
  std::vector<const Workspace*> ptrs;
  ptrs.reserve(workspaces.size());
  for (const auto& ws : workspaces) ptrs.push_back(&ws);
  RolloutOptions opt;
  opt.visit = visit;
  const auto results =
      rollout_episodes(actor, arm, context_slots, horizon, ptrs, opt);
  long wins = 0;
  for (const auto& r : results) wins += r.success ? 1 : 0;
  return static_cast<double>(wins) / static_cast<double>(results.size());
}

// ---- hindsight relabeling and demonstrations ----

// k relabeled copies per transition under the "future" strategy: the goal is
// replaced by the end-effector pose of a state later in the same episode and
// reward/class/done are recomputed under the new goal.
std::vector<Transition> her_relabel(const std::vector<Transition>& episode,
                                    int k, const ArmModel& arm, Rng& rng);

struct DemoInjection {
  int attempted = 0;
  int planned = 0;
  int transitions = 0;
  int planner_failures = 0;
};

// Plans demonstrations for up to `cap` failed workspaces (chosen uniformly
// when more failed), scores them, and appends them to the replay buffer.
// Planner failures are skipped and counted.
DemoInjection inject_demonstrations(ReplayBuffer& replay,
                                    const std::vector<const Workspace*>& failed,
                                    const ArmModel& arm, int context_slots,
                                    const RrtParams& base_params, int cap,
                                    Rng& rng);

// ---- updates ----

// TD(0) targets: y = r + gamma * Q'(s', pi'(s')) for free-space transitions,
// y = r for terminal ones.
template <class S>
Eigen::Matrix<S, 1, Eigen::Dynamic> critic_targets(
    const AgentBundle<S>& b, const std::vector<const Transition*>& batch,
    const TrainerConfig& cfg) {
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  const MatX<S> s_next = stack_state<S>(batch, true);
  const MatX<S> a_next = b.actor_target.forward(s_next);
  const MatX<S> q_next = b.critic_target.forward(s_next, a_next);
  Eigen::Matrix<S, 1, Eigen::Dynamic> y(1, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Transition& t = *batch[i];
    S target = static_cast<S>(t.reward);
    if (t.cls == TransitionClass::kFree) {
      target += static_cast<S>(cfg.gamma) * q_next(0, i);
    }
    y(0, i) = target;
  }
  return y;
}

// Critic regression loss and gradients against fixed targets.
template <class S>
double critic_gradients(const AgentBundle<S>& b,
                        const std::vector<const Transition*>& batch,
                        const Eigen::Matrix<S, 1, Eigen::Dynamic>& y,
                        typename Mlp<S>::Gradients* trunk_grads,
                        typename Mlp<S>::Gradients* head_grads) {
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  const MatX<S> s_now = stack_state<S>(batch, false);
  const MatX<S> actions = stack_actions<S>(batch);

  typename Critic<S>::Cache cache;
  const MatX<S> q = b.critic.forward(s_now, actions, &cache);
  const Eigen::Matrix<S, 1, Eigen::Dynamic> diff = q.row(0) - y;
  const double loss =
      static_cast<double>(diff.template cast<double>().squaredNorm()) /
          static_cast<double>(n) +
      b.critic.weight_decay_loss();
  if (!std::isfinite(loss)) {
    throw std::runtime_error(
        "critic update rejected: non-finite loss (|q|max=" +
        std::to_string(static_cast<double>(
            q.template cast<double>().cwiseAbs().maxCoeff())) +
        ")");
  }
  if (trunk_grads && head_grads) {
    const MatX<S> d_q = (S(2) / static_cast<S>(n)) * diff;
    b.critic.backward(cache, d_q, trunk_grads, head_grads, nullptr, nullptr);
  }
  return loss;
}

template <class S>
double critic_update(AgentBundle<S>& b,
                     const std::vector<const Transition*>& batch,
                     const TrainerConfig& cfg) {
  const auto y = critic_targets(b, batch, cfg);
  auto trunk_grads = Mlp<S>::Gradients::sized(b.critic.trunk);
  auto head_grads = Mlp<S>::Gradients::sized(b.critic.head);
  const double loss = critic_gradients(b, batch, y, &trunk_grads, &head_grads);
  b.critic.adam_step(trunk_grads, head_grads, cfg.critic_opt);
  return loss;
}

// Deterministic policy gradient objective: mean Q(s, pi(s)) minus the
// pre-tanh penalty, differentiated through the frozen critic's action input.
// Fills loss gradients (the negative objective's) when grads is non-null.
template <class S>
double actor_gradients_ddpg(const AgentBundle<S>& b,
                            const std::vector<const Transition*>& batch,
                            typename Mlp<S>::Gradients* grads) {
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  const MatX<S> s_now = stack_state<S>(batch, false);

  typename Actor<S>::Cache acache;
  const MatX<S> a = b.actor.forward(s_now, &acache);
  typename Critic<S>::Cache ccache;
  const MatX<S> q = b.critic.forward(s_now, a, &ccache);

  const double objective =
      static_cast<double>(q.template cast<double>().sum()) /
          static_cast<double>(n) -
      b.actor.preactivation_penalty(acache);
  if (grads) {
    const MatX<S> d_q = MatX<S>::Constant(1, n, S(-1) / static_cast<S>(n));
    MatX<S> d_action;
    b.critic.backward(ccache, d_q, nullptr, nullptr, nullptr, &d_action);
    b.actor.backward(acache, d_action, grads);
  }
  return objective;
}

template <class S>
double actor_update_ddpg(AgentBundle<S>& b,
                         const std::vector<const Transition*>& batch,
                         const TrainerConfig& cfg) {
  auto grads = Mlp<S>::Gradients::sized(b.actor.net);
  const double objective = actor_gradients_ddpg(b, batch, &grads);
  b.actor.net.adam_step(grads, cfg.actor_opt);
  return objective;
}

// Model-based actor update: ascend the surrogate one-step return
// r~(s, pi(s)) + gamma * p~(s, pi(s)) * Q(...), where the critic term uses
// either the predicted next state with the target actor (lookahead form) or
// the current state (sampled form). Gradients flow through the surrogates,
// the dynamics, and the critic/target-actor inputs; their parameters stay
// frozen. Returns the ascended objective.
template <class S>
double actor_gradients_mp(const AgentBundle<S>& b, const Surrogates<S>& models,
                          const std::vector<const Transition*>& batch,
                          const TrainerConfig& cfg,
                          typename Mlp<S>::Gradients* grads) {
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index dof = batch[0]->c_from.size();
  const MatX<S> s_now = stack_state<S>(batch, false);

  typename Actor<S>::Cache acache;
  const MatX<S> a = b.actor.forward(s_now, &acache);

  MatX<S> surrogate_in(s_now.rows() + dof, n);
  surrogate_in << s_now, a;
  typename Surrogates<S>::Cache scache;
  const auto sout = models.forward(surrogate_in, &scache);

  const S gamma = static_cast<S>(cfg.gamma);
  MatX<S> d_action = MatX<S>::Zero(dof, n);
  double q_term_mean = 0.0;

  Eigen::Matrix<S, 1, Eigen::Dynamic> d_reward =
      Eigen::Matrix<S, 1, Eigen::Dynamic>::Constant(1, n,
                                                    S(-1) / static_cast<S>(n));
  Eigen::Matrix<S, 1, Eigen::Dynamic> d_p_free(1, n);

  if (cfg.actor_objective == ActorObjectiveForm::kNextStateLookahead) {
    MatX<S> s_next = s_now;
    s_next.bottomRows(dof) += static_cast<S>(kMotionStepNorm) * a;

    typename Actor<S>::Cache tcache;
    const MatX<S> a_next = b.actor_target.forward(s_next, &tcache);
    typename Critic<S>::Cache ccache;
    const MatX<S> q = b.critic.forward(s_next, a_next, &ccache);

    Eigen::Matrix<S, 1, Eigen::Dynamic> d_q(1, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      d_q(0, i) = -gamma * sout.p_free(0, i) / static_cast<S>(n);
      d_p_free(0, i) = -gamma * q(0, i) / static_cast<S>(n);
      q_term_mean += static_cast<double>(sout.p_free(0, i)) *
                     static_cast<double>(q(0, i));
    }
    if (grads) {
      MatX<S> d_s_next, d_a_next;
      b.critic.backward(ccache, d_q, nullptr, nullptr, &d_s_next, &d_a_next);
      d_s_next += b.actor_target.backward(tcache, d_a_next, nullptr, false);
      d_action += static_cast<S>(kMotionStepNorm) * d_s_next.bottomRows(dof);
    }
  } else {
    typename Critic<S>::Cache ccache;
    const MatX<S> q = b.critic.forward(s_now, a, &ccache);
    Eigen::Matrix<S, 1, Eigen::Dynamic> d_q(1, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      d_q(0, i) = -gamma * sout.p_free(0, i) / static_cast<S>(n);
      d_p_free(0, i) = -gamma * q(0, i) / static_cast<S>(n);
      q_term_mean += static_cast<double>(sout.p_free(0, i)) *
                     static_cast<double>(q(0, i));
    }
    if (grads) {
      MatX<S> d_a_critic;
      b.critic.backward(ccache, d_q, nullptr, nullptr, nullptr, &d_a_critic);
      d_action += d_a_critic;
    }
  }
  q_term_mean /= static_cast<double>(n);

  const double objective =
      static_cast<double>(sout.reward.template cast<double>().sum()) /
          static_cast<double>(n) +
      cfg.gamma * q_term_mean - b.actor.preactivation_penalty(acache);
  if (grads) {
    const MatX<S> d_surrogate_in =
        models.backward(scache, sout, d_reward, d_p_free);
    d_action += d_surrogate_in.bottomRows(dof);
    b.actor.backward(acache, d_action, grads);
  }
  return objective;
}

template <class S>
double actor_update_mp(AgentBundle<S>& b, const Surrogates<S>& models,
                       const std::vector<const Transition*>& batch,
                       const TrainerConfig& cfg) {
  auto grads = Mlp<S>::Gradients::sized(b.actor.net);
  const double objective =
      actor_gradients_mp(b, models, batch, cfg, &grads);
  b.actor.net.adam_step(grads, cfg.actor_opt);
  return objective;
}

// ---- the outer loop ----

struct TrainLogRow {
  int iteration = 0;
  long episodes_seen = 0;
  double test_success = 0.0;
  double critic_loss = 0.0;
  double actor_objective = 0.0;
  int demos_injected = 0;
};

struct TrainResult {
  std::vector<TrainLogRow> log;
  double best_test = -1.0;
  int best_iteration = -1;
  long episodes_seen = 0;
  int iterations = 0;
  std::vector<NamedNetwork> best_checkpoint;
  long demos_injected_total = 0;
  int demo_planner_failures = 0;
  bool stopped_on_perfect = false;
};

void write_train_log_header(std::ostream& out);
void write_train_log_row(std::ostream& out, const TrainLogRow& row);

template <class S>
class Trainer {
 public:
  Trainer(TrainerConfig cfg, ArmModel arm, int context_slots,
          const Surrogates<S>* models)
      : cfg_(std::move(cfg)),
        arm_(std::move(arm)),
        context_slots_(context_slots),
        models_(models),
        replay_(cfg_.replay_capacity),
        bundle_(AgentBundle<S>::random(
            context_width(context_slots) + arm_.dof(), arm_.dof(),
            cfg_.actor_arch, cfg_.critic_arch, cfg_.seed)) {
    if (variant_uses_model(cfg_.variant) && !models_) {
      throw std::invalid_argument(
          "model-based variant requires trained reward/transition models");
    }
  }

  AgentBundle<S>& bundle() { return bundle_; }
  const TrainerConfig& config() const { return cfg_; }
  long episodes_seen() const { return episodes_seen_; }
  int iteration() const { return iteration_; }

  // One iteration: collect episodes, optionally relabel and inject
  // demonstrations, then run the update block.
  TrainLogRow run_iteration(const std::vector<Workspace>& train_ws) {
    ++iteration_;
    const ExplorationPolicy expl = cfg_.effective_exploration();

    Rng pick(mix_seed(cfg_.seed, 0xA11CEULL,
                      static_cast<std::uint64_t>(iteration_)));
    std::vector<const Workspace*> picked(cfg_.episodes_per_iteration);
    for (auto& slot : picked) {
      slot = &train_ws[pick.uniform_int(static_cast<int>(train_ws.size()))];
    }

    RolloutOptions opt;
    opt.exploration = &expl;
    opt.seed_base = mix_seed(cfg_.seed, 0xE9150DEULL,
                             static_cast<std::uint64_t>(iteration_));
    opt.visit = visit_log_;
    opt.visit_episode_offset = static_cast<int>(episodes_seen_);
    auto episodes = rollout_episodes(bundle_.actor, arm_, context_slots_,
                                     cfg_.horizon, picked, opt);

    std::vector<const Workspace*> failed;
    for (std::size_t e = 0; e < episodes.size(); ++e) {
      if (!episodes[e].success) failed.push_back(picked[e]);
      Rng her_rng(mix_seed(cfg_.seed, 0x4E52ULL,
                           static_cast<std::uint64_t>(iteration_),
                           static_cast<std::uint64_t>(e)));
      std::vector<Transition> relabeled;
      if (variant_uses_her(cfg_.variant)) {
        relabeled =
            her_relabel(episodes[e].transitions, cfg_.her_k, arm_, her_rng);
      }
      for (auto& t : episodes[e].transitions) replay_.push(std::move(t));
      for (auto& t : relabeled) replay_.push(std::move(t));
    }
    episodes_seen_ += static_cast<long>(episodes.size());

    TrainLogRow row;
    if (variant_uses_demos(cfg_.variant) && !failed.empty()) {
      Rng demo_rng(mix_seed(cfg_.seed, 0xDE30ULL,
                            static_cast<std::uint64_t>(iteration_)));
      const DemoInjection inj =
          inject_demonstrations(replay_, failed, arm_, context_slots_,
                                cfg_.demo_rrt, cfg_.demo_cap, demo_rng);
      row.demos_injected = inj.planned;
      demos_injected_total_ += inj.planned;
      demo_planner_failures_ += inj.planner_failures;
    }

    double critic_loss = 0.0;
    double actor_objective = 0.0;
    for (int u = 0; u < cfg_.updates_per_iteration; ++u) {
      Rng batch_rng(mix_seed(cfg_.seed, 0xBA7CULL,
                             static_cast<std::uint64_t>(iteration_),
                             static_cast<std::uint64_t>(u)));
      const auto batch = replay_.sample(cfg_.batch_size, batch_rng);
      critic_loss = critic_update(bundle_, batch, cfg_);
      if (variant_uses_model(cfg_.variant)) {
        actor_objective = actor_update_mp(bundle_, *models_, batch, cfg_);
      } else {
        actor_objective = actor_update_ddpg(bundle_, batch, cfg_);
      }
      soft_update(bundle_.actor_target.net, bundle_.actor.net, cfg_.tau);
      soft_update(bundle_.critic_target.trunk, bundle_.critic.trunk, cfg_.tau);
      soft_update(bundle_.critic_target.head, bundle_.critic.head, cfg_.tau);
    }

    row.iteration = iteration_;
    row.episodes_seen = episodes_seen_;
    row.critic_loss = critic_loss;
    row.actor_objective = actor_objective;
    return row;
  }

  // Full protocol: iterate until the episode budget (or a perfect test
  // score), evaluating on the test split and retaining the best snapshot.
  TrainResult run(const std::vector<Workspace>& train_ws,
                  const std::vector<Workspace>& test_ws,
                  std::ostream* log_csv = nullptr,
                  const std::string& state_dir = {}) {
    if (train_ws.empty()) throw std::invalid_argument("empty train split");
    TrainResult result;
    result.best_test = best_test_;
    result.best_iteration = best_iteration_;
    if (log_csv && iteration_ == 0) write_train_log_header(*log_csv);

    while (episodes_seen_ < cfg_.episode_budget) {
      TrainLogRow row = run_iteration(train_ws);
      if (iteration_ % cfg_.eval_every == 0) {
        row.test_success = evaluate(bundle_.actor, arm_, context_slots_,
                                    cfg_.horizon, test_ws);
        if (row.test_success > best_test_) {
          best_test_ = row.test_success;
          best_iteration_ = iteration_;
          best_checkpoint_ = bundle_.to_checkpoint();
        }
      }
      result.log.push_back(row);
      if (log_csv) write_train_log_row(*log_csv, row);
      if (!state_dir.empty() && cfg_.snapshot_every > 0 &&
          iteration_ % cfg_.snapshot_every == 0) {
        save_state(state_dir);
      }
      if (cfg_.stop_on_perfect_test && row.test_success == 1.0) {
        result.stopped_on_perfect = true;
        break;
      }
    }

    result.best_test = best_test_;
    result.best_iteration = best_iteration_;
    result.episodes_seen = episodes_seen_;
    result.iterations = iteration_;
    result.best_checkpoint = best_checkpoint_;
    result.demos_injected_total = demos_injected_total_;
    result.demo_planner_failures = demo_planner_failures_;
    if (result.best_checkpoint.empty()) {
      result.best_checkpoint = bundle_.to_checkpoint();
    }
    return result;
  }

  void set_visit_log(VisitLog* log) { visit_log_ = log; }

  // Resumable state: networks with optimizer state, replay contents, and
  // progress counters. Random streams derive from (seed, iteration), so
  // counters are all that is needed to continue exactly.
  void save_state(const std::string& dir) const;
  void load_state(const std::string& dir);

 private:
  TrainerConfig cfg_;
  ArmModel arm_;
  int context_slots_;
  const Surrogates<S>* models_;
  ReplayBuffer replay_;
  AgentBundle<S> bundle_;
  long episodes_seen_ = 0;
  int iteration_ = 0;
  double best_test_ = -1.0;
  int best_iteration_ = -1;
  std::vector<NamedNetwork> best_checkpoint_;
  long demos_injected_total_ = 0;
  int demo_planner_failures_ = 0;
  VisitLog* visit_log_ = nullptr;
};

// Replay dump used by the resumable trainer state.
void save_replay(const ReplayBuffer& replay, const std::string& path);
void load_replay(ReplayBuffer& replay, const std::string& path);

void write_progress(const std::string& path, int iteration, long episodes_seen,
                    double best_test, int best_iteration, long demos_total,
                    int demo_failures);
void read_progress(const std::string& path, int& iteration,
                   long& episodes_seen, double& best_test, int& best_iteration,
                   long& demos_total, int& demo_failures);

template <class S>
void Trainer<S>::save_state(const std::string& dir) const {
  save_checkpoint(bundle_.to_checkpoint(), dir + "/state.ckpt");
  if (!best_checkpoint_.empty()) {
    save_checkpoint(best_checkpoint_, dir + "/best.ckpt");
  }
  save_replay(replay_, dir + "/replay.nmpr");
  write_progress(dir + "/progress.txt", iteration_, episodes_seen_, best_test_,
                 best_iteration_, demos_injected_total_,
                 demo_planner_failures_);
}

template <class S>
void Trainer<S>::load_state(const std::string& dir) {
  bundle_ = AgentBundle<S>::from_checkpoint(
      load_checkpoint(dir + "/state.ckpt"), cfg_.actor_arch.preactivation_l2);
  load_replay(replay_, dir + "/replay.nmpr");
  read_progress(dir + "/progress.txt", iteration_, episodes_seen_, best_test_,
                best_iteration_, demos_injected_total_,
                demo_planner_failures_);
  std::ifstream best(dir + "/best.ckpt");
  if (best.good()) {
    best.close();
    best_checkpoint_ = load_checkpoint(dir + "/best.ckpt");
  }
}

}  // namespace nmp
