#pragma once

#include <string>

#include "nmp/imitation.hpp"
#include "nmp/surrogates.hpp"
#include "nmp/trainer.hpp"

namespace nmp {

// Bad configuration (unknown key, malformed value, missing artifact named by
// the config). The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key=value experiment description. Every field has a default; files
// round-trip losslessly through parse -> serialize -> parse.
struct ExperimentConfig {
  std::string scenario;     // scenario spec file
  std::string dataset_dir;  // directory written by `gen`
  std::string output_dir;

  std::string variant = "ddpg";
  std::uint64_t seed = 1;
  int threads = 1;

  double gamma = 0.99;
  int batch_size = 512;
  int episodes_per_iteration = 16;
  int updates_per_iteration = 40;
  double tau = 0.95;
  int demo_cap = 8;
  int her_k = 4;
  int horizon = 300;
  std::size_t replay_capacity = 1000000;
  double actor_lr = 0.001;
  double critic_lr = 0.001;
  double grad_clip = 1.0;
  double actor_preact_l2 = 1.0;
  double critic_weight_decay = 1e-6;
  // Negative: use the variant's default exploration.
  double p_random = -1.0;
  double gaussian_std = -1.0;
  long episode_budget = 20000;
  int eval_test_size = 200;
  int eval_validation_size = 1000;
  bool stop_on_perfect = true;
  std::string actor_objective = "lookahead";  // or "sampled"
  int snapshot_every = 0;

  int actor_hidden_layers = 4;
  int actor_hidden_width = 200;
  int critic_state_layers = 3;
  int critic_merged_layers = 4;
  int critic_hidden_width = 400;

  std::string surrogate_checkpoint;  // default: <dataset_dir>/surrogates.ckpt
  int surrogate_samples = 600000;
  int surrogate_epochs = 30;
  int surrogate_batch = 10000;
  double surrogate_lr = 0.001;
  double surrogate_clip = 5.0;
  double surrogate_weight_decay = 0.0001;
  int surrogate_hidden_layers = 4;
  int surrogate_hidden_width = 100;

  int rrt_iterations = 50000;
  double rrt_step = 0.5;
  double rrt_goal_bias = 0.1;

  std::string corpus_file;  // default: <output_dir>/corpus.nmpd
  int corpus_episodes = 4000;
  int bc_epochs = 100;
  double bc_lr = 0.0001;
  double bc_clip = 5.0;
  int bc_batch = 512;

  int dagger_rounds = 10;
  int dagger_episodes_per_round = 200;
  int dagger_epochs_per_round = 10;
  int dagger_expert_states = 5;

  int bench_count = 100;
  int visit_rl_episodes = 2000;
  int visit_expert_episodes = 200;

  TrainerConfig trainer_config() const;
  SurrogateTrainConfig surrogate_config() const;
  BcConfig bc_config() const;
  DaggerConfig dagger_config() const;
  RrtParams rrt_params() const;
  ActorArch actor_arch() const;
  CriticArch critic_arch() const;

  std::string surrogate_checkpoint_path() const {
    return surrogate_checkpoint.empty() ? dataset_dir + "/surrogates.ckpt"
                                        : surrogate_checkpoint;
  }
  std::string corpus_path() const {
    return corpus_file.empty() ? output_dir + "/corpus.nmpd" : corpus_file;
  }
};

ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& cfg, const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);
ExperimentConfig parse_config(const std::string& text,
                              const std::string& origin = "<config>");

}  // namespace nmp
