#pragma once

#include <array>
#include <vector>

#include "nmp/agent.hpp"
#include "nmp/env.hpp"
#include "nmp/net.hpp"

namespace nmp {

// Class index order inside the classifier's softmax output.
inline constexpr int kClassFree = 0;
inline constexpr int kClassGoal = 1;
inline constexpr int kClassCollision = 2;

inline int class_index(TransitionClass cls) {
  switch (cls) {
    case TransitionClass::kFree:
      return kClassFree;
    case TransitionClass::kGoal:
      return kClassGoal;
    case TransitionClass::kCollision:
      return kClassCollision;
  }
  return kClassFree;
}

struct LabeledTransition {
  Vec context;
  Configuration config;
  Vec action;
  TransitionClass cls = TransitionClass::kFree;
  double reward = 0.0;
};

// Random (state, unit action) pairs labeled with the known reward function.
std::vector<LabeledTransition> generate_labeled_transitions(
    const std::vector<Workspace>& workspaces, const ArmModel& arm,
    int context_slots, int n, Rng& rng);

struct SurrogateTrainConfig {
  int epochs = 30;
  // The linear reward fit is cheap per step and needs far more of them.
  int regressor_epochs = 400;
  int batch_size = 10000;
  double learning_rate = 0.001;
  double gradient_clip = 5.0;
  double weight_decay = 1e-4;
  double validation_fraction = 0.1;
  int hidden_layers = 4;
  int hidden_width = 100;
  std::uint64_t seed = 1;
};

// Differentiable stand-ins for the transition class and reward: a softmax
// classifier over (context, config, action) and a linear reward regressor
// that additionally sees the class probabilities.
template <class S>
struct Surrogates {
  Mlp<S> classifier;
  Mlp<S> regressor;
  // Alternative free-probability readout: softmax between the free logit and
  // the larger of the two termination logits, instead of the plain softmax
  // free probability. Both behave the same in practice.
  bool two_logit_free = false;

  struct Cache {
    typename Mlp<S>::Cache cls;
    typename Mlp<S>::Cache reg;
  };

  struct Output {
    Eigen::Matrix<S, 1, Eigen::Dynamic> reward;
    Eigen::Matrix<S, 1, Eigen::Dynamic> p_free;
    MatX<S> probs;
  };

  // input columns: [context; config; action].
  Output forward(const MatX<S>& input, Cache* cache = nullptr) const {
    Cache local;
    Cache* c = cache ? cache : &local;
    Output out;
    out.probs = classifier.forward(input, &c->cls);
    MatX<S> reg_in(input.rows() + 3, input.cols());
    reg_in << input, out.probs;
    out.reward = regressor.forward(reg_in, &c->reg);
    if (two_logit_free) {
      const MatX<S>& logits = c->cls.last_pre;
      out.p_free.resize(1, input.cols());
      for (Eigen::Index j = 0; j < input.cols(); ++j) {
        const S lf = logits(kClassFree, j);
        const S lt = std::max(logits(kClassGoal, j),
                              logits(kClassCollision, j));
        out.p_free(0, j) = S(1) / (S(1) + std::exp(lt - lf));
      }
    } else {
      out.p_free = out.probs.row(kClassFree);
    }
    return out;
  }

  // d(loss)/d(input) given gradients at the reward and free-probability
  // outputs. Surrogate parameters stay frozen (no parameter gradients); this
  // is the path the model-based actor update differentiates through.
  MatX<S> backward(const Cache& cache, const Output& out,
                   const Eigen::Matrix<S, 1, Eigen::Dynamic>& d_reward,
                   const Eigen::Matrix<S, 1, Eigen::Dynamic>& d_p_free) const {
    const MatX<S> d_reg_in = regressor.backward(cache.reg, d_reward);
    const Eigen::Index in_rows = cache.cls.input.rows();
    MatX<S> d_input = d_reg_in.topRows(in_rows);
    MatX<S> d_probs = d_reg_in.bottomRows(3);

    MatX<S> logit_extra = MatX<S>::Zero(3, d_probs.cols());
    bool use_extra = false;
    if (two_logit_free) {
      // sigma'(lf - lt) routed to the free logit and the active termination
      // logit; differentiable almost everywhere.
      const MatX<S>& logits = cache.cls.last_pre;
      for (Eigen::Index j = 0; j < d_probs.cols(); ++j) {
        const S p = out.p_free(0, j);
        const S g = d_p_free(0, j) * p * (S(1) - p);
        const int term = logits(kClassGoal, j) >= logits(kClassCollision, j)
                             ? kClassGoal
                             : kClassCollision;
        logit_extra(kClassFree, j) += g;
        logit_extra(term, j) -= g;
      }
      use_extra = true;
    } else {
      d_probs.row(kClassFree) += d_p_free;
    }
    d_input += classifier.backward(cache.cls, d_probs, nullptr,
                                   use_extra ? &logit_extra : nullptr);
    return d_input;
  }

  template <class T>
  Surrogates<T> cast() const {
    Surrogates<T> out;
    out.classifier = classifier.template cast<T>();
    out.regressor = regressor.template cast<T>();
    out.two_logit_free = two_logit_free;
    return out;
  }
};

// Per-class counts in `data`.
std::array<int, 3> class_counts(const std::vector<LabeledTransition>& data);

struct ClassifierTrainResult {
  double best_balanced_accuracy = 0.0;
  int best_epoch = -1;
};

// Cross-entropy training with class-rebalanced batches (minority classes
// oversampled, the majority pool iterated whole every epoch); keeps the
// best-validation snapshot. Throws when a class is missing from the data.
template <class S>
Mlp<S> train_transition_classifier(const std::vector<LabeledTransition>& data,
                                   const SurrogateTrainConfig& cfg,
                                   ClassifierTrainResult* result = nullptr);

// MSE fit of the reward against (context, config, action, class probs).
// Balanced batches when all classes are present, plain ones otherwise.
template <class S>
Mlp<S> train_reward_regressor(const std::vector<LabeledTransition>& data,
                              const Mlp<S>& classifier,
                              const SurrogateTrainConfig& cfg,
                              double* held_out_mse = nullptr);

// Convenience: labeled-data generation plus both fits.
template <class S>
Surrogates<S> train_surrogates(const std::vector<Workspace>& workspaces,
                               const ArmModel& arm, int context_slots,
                               int sample_count,
                               const SurrogateTrainConfig& cfg,
                               ClassifierTrainResult* cls_result = nullptr,
                               double* regressor_mse = nullptr);

// Single-sample free probability, mainly for tests and inspection.
template <class S>
double free_probability(const Surrogates<S>& models, const Vec& context,
                        const Configuration& config, const Vec& action) {
  MatX<S> in(context.size() + config.size() + action.size(), 1);
  in.col(0).head(context.size()) = context.cast<S>();
  in.col(0).segment(context.size(), config.size()) = config.cast<S>();
  in.col(0).tail(action.size()) = action.cast<S>();
  return static_cast<double>(models.forward(in).p_free(0, 0));
}

template <class S>
double surrogate_reward(const Surrogates<S>& models, const Vec& context,
                        const Configuration& config, const Vec& action) {
  MatX<S> in(context.size() + config.size() + action.size(), 1);
  in.col(0).head(context.size()) = context.cast<S>();
  in.col(0).segment(context.size(), config.size()) = config.cast<S>();
  in.col(0).tail(action.size()) = action.cast<S>();
  return static_cast<double>(models.forward(in).reward(0, 0));
}

// ---- implementation ----

namespace detail {

template <class S>
MatX<S> surrogate_inputs(const std::vector<LabeledTransition>& data,
                         const std::vector<int>& idx) {
  const auto& first = data[idx[0]];
  const Eigen::Index ctx = first.context.size();
  const Eigen::Index dof = first.config.size();
  MatX<S> in(ctx + 2 * dof, static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& row = data[idx[i]];
    const Eigen::Index j = static_cast<Eigen::Index>(i);
    in.col(j).head(ctx) = row.context.cast<S>();
    in.col(j).segment(ctx, dof) = row.config.cast<S>();
    in.col(j).tail(dof) = row.action.cast<S>();
  }
  return in;
}

// Shuffled index split into a training part and a held-out tail.
inline std::pair<std::vector<int>, std::vector<int>> split_indices(
    std::size_t n, double validation_fraction, Rng& rng) {
  std::vector<int> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(idx[i - 1], idx[rng.uniform_int(static_cast<int>(i))]);
  }
  const std::size_t val =
      std::min(n > 1 ? n - 1 : std::size_t{0},
               static_cast<std::size_t>(validation_fraction * n));
  std::vector<int> train(idx.begin(), idx.end() - val);
  std::vector<int> held(idx.end() - val, idx.end());
  return {std::move(train), std::move(held)};
}

// Batches whose class counts differ by at most one. The largest pool is
// walked in order (wrapping on the final batch); smaller pools are sampled
// with replacement.
class BalancedBatcher {
 public:
  BalancedBatcher(const std::vector<LabeledTransition>& data,
                  const std::vector<int>& train_idx, int batch_size)
      : batch_size_(batch_size) {
    for (int i : train_idx) pools_[class_index(data[i].cls)].push_back(i);
    for (const auto& pool : pools_) {
      if (!pool.empty()) ++present_;
    }
  }

  bool all_present() const { return present_ == 3; }
  const std::vector<int>& pool(int cls) const { return pools_[cls]; }

  std::size_t largest_pool() const {
    std::size_t m = 0;
    for (const auto& pool : pools_) m = std::max(m, pool.size());
    return m;
  }

  int batches_per_epoch() const {
    const int share = batch_size_ / present_;
    return static_cast<int>(
        (largest_pool() + share - 1) / static_cast<std::size_t>(share));
  }

  void start_epoch(Rng& rng) {
    for (auto& pool : pools_) {
      for (std::size_t i = pool.size(); i > 1; --i) {
        std::swap(pool[i - 1], pool[rng.uniform_int(static_cast<int>(i))]);
      }
    }
    cursors_ = {0, 0, 0};
  }

  std::vector<int> next_batch(Rng& rng) {
    std::vector<int> out;
    out.reserve(batch_size_);
    int extra = batch_size_ % present_;
    for (int c = 0; c < 3; ++c) {
      const auto& pool = pools_[c];
      if (pool.empty()) continue;
      int count = batch_size_ / present_;
      if (extra > 0) {
        ++count;
        --extra;
      }
      const bool is_largest = pool.size() == largest_pool();
      for (int k = 0; k < count; ++k) {
        if (is_largest) {
          out.push_back(pool[cursors_[c] % pool.size()]);
          ++cursors_[c];
        } else {
          out.push_back(pool[rng.uniform_int(static_cast<int>(pool.size()))]);
        }
      }
    }
    return out;
  }

 private:
  int batch_size_;
  int present_ = 0;
  std::array<std::vector<int>, 3> pools_;
  std::array<std::size_t, 3> cursors_ = {0, 0, 0};
};

}  // namespace detail

template <class S>
Mlp<S> train_transition_classifier(const std::vector<LabeledTransition>& data,
                                   const SurrogateTrainConfig& cfg,
                                   ClassifierTrainResult* result) {
  const auto counts = class_counts(data);
  for (int c = 0; c < 3; ++c) {
    if (counts[c] == 0) {
      throw std::runtime_error(std::string("transition class '") +
                               to_string(static_cast<TransitionClass>(c)) +
                               "' missing from training data");
    }
  }
  Rng rng(cfg.seed);
  const Eigen::Index in_width = data[0].context.size() +
                                2 * data[0].config.size();
  std::vector<LayerSpec> specs;
  int in = static_cast<int>(in_width);
  for (int l = 0; l < cfg.hidden_layers; ++l) {
    specs.push_back({in, cfg.hidden_width, Activation::kElu, cfg.weight_decay});
    in = cfg.hidden_width;
  }
  specs.push_back({in, 3, Activation::kSoftmax, cfg.weight_decay});
  Mlp<S> net = Mlp<S>::random(std::move(specs), rng);

  auto [train_idx, val_idx] =
      detail::split_indices(data.size(), cfg.validation_fraction, rng);
  detail::BalancedBatcher batcher(data, train_idx, cfg.batch_size);

  OptimizerConfig opt;
  opt.learning_rate = cfg.learning_rate;
  opt.gradient_clip_norm = cfg.gradient_clip;

  auto balanced_accuracy = [&](const Mlp<S>& candidate) {
    if (val_idx.empty()) return 0.0;
    const MatX<S> in_val = detail::surrogate_inputs<S>(data, val_idx);
    const MatX<S> probs = candidate.forward(in_val);
    std::array<long, 3> right = {0, 0, 0};
    std::array<long, 3> total = {0, 0, 0};
    for (std::size_t i = 0; i < val_idx.size(); ++i) {
      Eigen::Index pred = 0;
      probs.col(static_cast<Eigen::Index>(i)).maxCoeff(&pred);
      const int label = class_index(data[val_idx[i]].cls);
      ++total[label];
      if (pred == label) ++right[label];
    }
    double acc = 0.0;
    int present = 0;
    for (int c = 0; c < 3; ++c) {
      if (total[c] == 0) continue;
      acc += static_cast<double>(right[c]) / static_cast<double>(total[c]);
      ++present;
    }
    return present ? acc / present : 0.0;
  };

  Mlp<S> best = net;
  ClassifierTrainResult res;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    batcher.start_epoch(rng);
    const int n_batches = batcher.batches_per_epoch();
    for (int b = 0; b < n_batches; ++b) {
      const std::vector<int> batch = batcher.next_batch(rng);
      const MatX<S> input = detail::surrogate_inputs<S>(data, batch);
      typename Mlp<S>::Cache cache;
      const MatX<S> probs = net.forward(input, &cache);
      const Eigen::Index n = input.cols();
      MatX<S> d_probs = MatX<S>::Zero(3, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const int label = class_index(data[batch[i]].cls);
        const S p = std::max(probs(label, i), S(1e-30));
        d_probs(label, i) = S(-1) / (p * static_cast<S>(n));
      }
      auto grads = Mlp<S>::Gradients::sized(net);
      net.backward(cache, d_probs, &grads);
      net.adam_step(grads, opt);
    }
    const double acc = balanced_accuracy(net);
    if (acc > res.best_balanced_accuracy) {
      res.best_balanced_accuracy = acc;
      res.best_epoch = epoch;
      best = net;
    }
  }
  if (result) *result = res;
  return best;
}

template <class S>
Mlp<S> train_reward_regressor(const std::vector<LabeledTransition>& data,
                              const Mlp<S>& classifier,
                              const SurrogateTrainConfig& cfg,
                              double* held_out_mse) {
  if (data.empty()) throw std::invalid_argument("no regressor data");
  Rng rng(mix_seed(cfg.seed, 0x7265677265ull));
  const int in_width = classifier.input_width() + 3;
  Mlp<S> net = Mlp<S>::random(
      {{in_width, 1, Activation::kLinear, cfg.weight_decay}}, rng);

  auto [train_idx, val_idx] =
      detail::split_indices(data.size(), cfg.validation_fraction, rng);
  detail::BalancedBatcher batcher(data, train_idx, cfg.batch_size);

  OptimizerConfig opt;
  opt.learning_rate = cfg.learning_rate;
  opt.gradient_clip_norm = cfg.gradient_clip;

  // The classifier is frozen here, so its probabilities are computed once
  // for the whole dataset and the fit itself touches only the linear layer.
  MatX<S> features(in_width, static_cast<Eigen::Index>(data.size()));
  {
    std::vector<int> all(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) all[i] = static_cast<int>(i);
    const MatX<S> x = detail::surrogate_inputs<S>(data, all);
    features.topRows(x.rows()) = x;
    features.bottomRows(3) = classifier.forward(x);
  }
  auto gather = [&](const std::vector<int>& idx) {
    MatX<S> in(in_width, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      in.col(static_cast<Eigen::Index>(i)) = features.col(idx[i]);
    }
    return in;
  };

  for (int epoch = 0; epoch < cfg.regressor_epochs; ++epoch) {
    batcher.start_epoch(rng);
    const int n_batches = batcher.batches_per_epoch();
    for (int b = 0; b < n_batches; ++b) {
      const std::vector<int> batch = batcher.next_batch(rng);
      const MatX<S> input = gather(batch);
      typename Mlp<S>::Cache cache;
      const MatX<S> pred = net.forward(input, &cache);
      const Eigen::Index n = input.cols();
      MatX<S> d_out(1, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const S y = static_cast<S>(data[batch[i]].reward);
        d_out(0, i) = S(2) * (pred(0, i) - y) / static_cast<S>(n);
      }
      auto grads = Mlp<S>::Gradients::sized(net);
      net.backward(cache, d_out, &grads);
      net.adam_step(grads, opt);
    }
  }

  if (held_out_mse) {
    *held_out_mse = 0.0;
    if (!val_idx.empty()) {
      const MatX<S> input = gather(val_idx);
      const MatX<S> pred = net.forward(input);
      double err = 0.0;
      for (std::size_t i = 0; i < val_idx.size(); ++i) {
        const double d = static_cast<double>(pred(0, static_cast<Eigen::Index>(i))) -
                         data[val_idx[i]].reward;
        err += d * d;
      }
      *held_out_mse = err / static_cast<double>(val_idx.size());
    }
  }
  return net;
}

template <class S>
Surrogates<S> train_surrogates(const std::vector<Workspace>& workspaces,
                               const ArmModel& arm, int context_slots,
                               int sample_count,
                               const SurrogateTrainConfig& cfg,
                               ClassifierTrainResult* cls_result,
                               double* regressor_mse) {
  Rng rng(mix_seed(cfg.seed, 0x64617461ull));
  const auto data = generate_labeled_transitions(workspaces, arm,
                                                 context_slots, sample_count,
                                                 rng);
  Surrogates<S> out;
  out.classifier = train_transition_classifier<S>(data, cfg, cls_result);
  out.regressor =
      train_reward_regressor<S>(data, out.classifier, cfg, regressor_mse);
  return out;
}

}  // namespace nmp
