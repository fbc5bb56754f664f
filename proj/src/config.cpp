#include "nmp/config.hpp"

#include <fstream>
#include <sstream>

#include "nmp/textio.hpp"

namespace nmp {

TrainerConfig ExperimentConfig::trainer_config() const {
  TrainerConfig t;
  t.variant = variant_from_string(variant);
  t.gamma = gamma;
  t.batch_size = batch_size;
  t.episodes_per_iteration = episodes_per_iteration;
  t.updates_per_iteration = updates_per_iteration;
  t.tau = tau;
  t.demo_cap = demo_cap;
  t.her_k = her_k;
  t.horizon = horizon;
  t.replay_capacity = replay_capacity;
  t.actor_opt.learning_rate = actor_lr;
  t.actor_opt.gradient_clip_norm = grad_clip;
  t.critic_opt.learning_rate = critic_lr;
  t.critic_opt.gradient_clip_norm = grad_clip;
  t.actor_arch = actor_arch();
  t.critic_arch = critic_arch();
  t.exploration = {p_random, gaussian_std};
  t.episode_budget = episode_budget;
  t.stop_on_perfect_test = stop_on_perfect;
  if (actor_objective == "lookahead") {
    t.actor_objective = ActorObjectiveForm::kNextStateLookahead;
  } else if (actor_objective == "sampled") {
    t.actor_objective = ActorObjectiveForm::kCurrentStateSample;
  } else {
    throw ConfigError("actor_objective must be lookahead|sampled, got '" +
                      actor_objective + "'");
  }
  t.demo_rrt = rrt_params();
  t.seed = seed;
  t.snapshot_every = snapshot_every;
  return t;
}

SurrogateTrainConfig ExperimentConfig::surrogate_config() const {
  SurrogateTrainConfig s;
  s.epochs = surrogate_epochs;
  s.batch_size = surrogate_batch;
  s.learning_rate = surrogate_lr;
  s.gradient_clip = surrogate_clip;
  s.weight_decay = surrogate_weight_decay;
  s.hidden_layers = surrogate_hidden_layers;
  s.hidden_width = surrogate_hidden_width;
  s.seed = mix_seed(seed, 0x5352ULL);
  return s;
}

BcConfig ExperimentConfig::bc_config() const {
  BcConfig b;
  b.epochs = bc_epochs;
  b.batch_size = bc_batch;
  b.opt.learning_rate = bc_lr;
  b.opt.gradient_clip_norm = bc_clip;
  b.arch = actor_arch();
  b.horizon = horizon;
  b.seed = seed;
  return b;
}

DaggerConfig ExperimentConfig::dagger_config() const {
  DaggerConfig d;
  d.bc = bc_config();
  d.rounds = dagger_rounds;
  d.episodes_per_round = dagger_episodes_per_round;
  d.epochs_per_round = dagger_epochs_per_round;
  d.expert_states_per_failure = dagger_expert_states;
  d.rrt = rrt_params();
  return d;
}

RrtParams ExperimentConfig::rrt_params() const {
  RrtParams r;
  r.max_iterations = rrt_iterations;
  r.extension_step = rrt_step;
  r.goal_bias = rrt_goal_bias;
  r.seed = mix_seed(seed, 0x52525454ULL);
  return r;
}

ActorArch ExperimentConfig::actor_arch() const {
  return {actor_hidden_layers, actor_hidden_width, actor_preact_l2};
}

CriticArch ExperimentConfig::critic_arch() const {
  return {critic_state_layers, critic_merged_layers, critic_hidden_width,
          critic_weight_decay};
}

namespace {

struct Field {
  const char* key;
  enum Kind { kString, kDouble, kInt, kLong, kSize, kU64, kBool } kind;
  void* (*get)(ExperimentConfig&);
};

template <auto Member>
void* member(ExperimentConfig& c) {
  return &(c.*Member);
}

const Field kFields[] = {
    {"scenario", Field::kString, member<&ExperimentConfig::scenario>},
    {"dataset_dir", Field::kString, member<&ExperimentConfig::dataset_dir>},
    {"output_dir", Field::kString, member<&ExperimentConfig::output_dir>},
    {"variant", Field::kString, member<&ExperimentConfig::variant>},
    {"seed", Field::kU64, member<&ExperimentConfig::seed>},
    {"threads", Field::kInt, member<&ExperimentConfig::threads>},
    {"gamma", Field::kDouble, member<&ExperimentConfig::gamma>},
    {"batch_size", Field::kInt, member<&ExperimentConfig::batch_size>},
    {"episodes_per_iteration", Field::kInt,
     member<&ExperimentConfig::episodes_per_iteration>},
    {"updates_per_iteration", Field::kInt,
     member<&ExperimentConfig::updates_per_iteration>},
    {"tau", Field::kDouble, member<&ExperimentConfig::tau>},
    {"demo_cap", Field::kInt, member<&ExperimentConfig::demo_cap>},
    {"her_k", Field::kInt, member<&ExperimentConfig::her_k>},
    {"horizon", Field::kInt, member<&ExperimentConfig::horizon>},
    {"replay_capacity", Field::kSize,
     member<&ExperimentConfig::replay_capacity>},
    {"actor_lr", Field::kDouble, member<&ExperimentConfig::actor_lr>},
    {"critic_lr", Field::kDouble, member<&ExperimentConfig::critic_lr>},
    {"grad_clip", Field::kDouble, member<&ExperimentConfig::grad_clip>},
    {"actor_preact_l2", Field::kDouble,
     member<&ExperimentConfig::actor_preact_l2>},
    {"critic_weight_decay", Field::kDouble,
     member<&ExperimentConfig::critic_weight_decay>},
    {"p_random", Field::kDouble, member<&ExperimentConfig::p_random>},
    {"gaussian_std", Field::kDouble, member<&ExperimentConfig::gaussian_std>},
    {"episode_budget", Field::kLong,
     member<&ExperimentConfig::episode_budget>},
    {"eval_test_size", Field::kInt,
     member<&ExperimentConfig::eval_test_size>},
    {"eval_validation_size", Field::kInt,
     member<&ExperimentConfig::eval_validation_size>},
    {"stop_on_perfect", Field::kBool,
     member<&ExperimentConfig::stop_on_perfect>},
    {"actor_objective", Field::kString,
     member<&ExperimentConfig::actor_objective>},
    {"snapshot_every", Field::kInt, member<&ExperimentConfig::snapshot_every>},
    {"actor_hidden_layers", Field::kInt,
     member<&ExperimentConfig::actor_hidden_layers>},
    {"actor_hidden_width", Field::kInt,
     member<&ExperimentConfig::actor_hidden_width>},
    {"critic_state_layers", Field::kInt,
     member<&ExperimentConfig::critic_state_layers>},
    {"critic_merged_layers", Field::kInt,
     member<&ExperimentConfig::critic_merged_layers>},
    {"critic_hidden_width", Field::kInt,
     member<&ExperimentConfig::critic_hidden_width>},
    {"surrogate_checkpoint", Field::kString,
     member<&ExperimentConfig::surrogate_checkpoint>},
    {"surrogate_samples", Field::kInt,
     member<&ExperimentConfig::surrogate_samples>},
    {"surrogate_epochs", Field::kInt,
     member<&ExperimentConfig::surrogate_epochs>},
    {"surrogate_batch", Field::kInt,
     member<&ExperimentConfig::surrogate_batch>},
    {"surrogate_lr", Field::kDouble, member<&ExperimentConfig::surrogate_lr>},
    {"surrogate_clip", Field::kDouble,
     member<&ExperimentConfig::surrogate_clip>},
    {"surrogate_weight_decay", Field::kDouble,
     member<&ExperimentConfig::surrogate_weight_decay>},
    {"surrogate_hidden_layers", Field::kInt,
     member<&ExperimentConfig::surrogate_hidden_layers>},
    {"surrogate_hidden_width", Field::kInt,
     member<&ExperimentConfig::surrogate_hidden_width>},
    {"rrt_iterations", Field::kInt, member<&ExperimentConfig::rrt_iterations>},
    {"rrt_step", Field::kDouble, member<&ExperimentConfig::rrt_step>},
    {"rrt_goal_bias", Field::kDouble,
     member<&ExperimentConfig::rrt_goal_bias>},
    {"corpus_file", Field::kString, member<&ExperimentConfig::corpus_file>},
    {"corpus_episodes", Field::kInt,
     member<&ExperimentConfig::corpus_episodes>},
    {"bc_epochs", Field::kInt, member<&ExperimentConfig::bc_epochs>},
    {"bc_lr", Field::kDouble, member<&ExperimentConfig::bc_lr>},
    {"bc_clip", Field::kDouble, member<&ExperimentConfig::bc_clip>},
    {"bc_batch", Field::kInt, member<&ExperimentConfig::bc_batch>},
    {"dagger_rounds", Field::kInt, member<&ExperimentConfig::dagger_rounds>},
    {"dagger_episodes_per_round", Field::kInt,
     member<&ExperimentConfig::dagger_episodes_per_round>},
    {"dagger_epochs_per_round", Field::kInt,
     member<&ExperimentConfig::dagger_epochs_per_round>},
    {"dagger_expert_states", Field::kInt,
     member<&ExperimentConfig::dagger_expert_states>},
    {"bench_count", Field::kInt, member<&ExperimentConfig::bench_count>},
    {"visit_rl_episodes", Field::kInt,
     member<&ExperimentConfig::visit_rl_episodes>},
    {"visit_expert_episodes", Field::kInt,
     member<&ExperimentConfig::visit_expert_episodes>},
};

std::string value_text(const ExperimentConfig& cfg, const Field& f) {
  void* p = f.get(const_cast<ExperimentConfig&>(cfg));
  switch (f.kind) {
    case Field::kString:
      return *static_cast<std::string*>(p);
    case Field::kDouble:
      return format_g17(*static_cast<double*>(p));
    case Field::kInt:
      return std::to_string(*static_cast<int*>(p));
    case Field::kLong:
      return std::to_string(*static_cast<long*>(p));
    case Field::kSize:
      return std::to_string(*static_cast<std::size_t*>(p));
    case Field::kU64:
      return std::to_string(*static_cast<std::uint64_t*>(p));
    case Field::kBool:
      return *static_cast<bool*>(p) ? "1" : "0";
  }
  return {};
}

void assign(ExperimentConfig& cfg, const Field& f, const std::string& text) {
  void* p = f.get(cfg);
  switch (f.kind) {
    case Field::kString:
      *static_cast<std::string*>(p) = text;
      return;
    case Field::kDouble:
      *static_cast<double*>(p) = parse_double(text);
      return;
    case Field::kInt:
      *static_cast<int*>(p) = std::stoi(text);
      return;
    case Field::kLong:
      *static_cast<long*>(p) = std::stol(text);
      return;
    case Field::kSize:
      *static_cast<std::size_t*>(p) = std::stoull(text);
      return;
    case Field::kU64:
      *static_cast<std::uint64_t*>(p) = std::stoull(text);
      return;
    case Field::kBool:
      if (text == "1" || text == "true") {
        *static_cast<bool*>(p) = true;
      } else if (text == "0" || text == "false") {
        *static_cast<bool*>(p) = false;
      } else {
        throw std::runtime_error("expected 0|1");
      }
      return;
  }
}

}  // namespace

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "nmp-config v1\n";
  for (const Field& f : kFields) {
    out << f.key << '=' << value_text(cfg, f) << '\n';
  }
  return out.str();
}

ExperimentConfig parse_config(const std::string& text,
                              const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "nmp-config v1") {
    throw ConfigError(origin + ":1: expected header 'nmp-config v1'");
  }
  ExperimentConfig cfg;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto pos = line.find('=');
    if (pos == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": expected key=value");
    }
    const std::string key = line.substr(0, pos);
    const std::string value = line.substr(pos + 1);
    const Field* found = nullptr;
    for (const Field& f : kFields) {
      if (key == f.key) {
        found = &f;
        break;
      }
    }
    if (!found) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": unknown key '" + key + "'");
    }
    try {
      assign(cfg, *found, value);
    } catch (const std::exception& e) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + key +
                        ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path);
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << serialize_config(cfg);
}

}  // namespace nmp
