#pragma once

#include "nmp/env.hpp"
#include "nmp/net.hpp"

namespace nmp {

// Network shapes. Hidden widths/depths follow the experiment defaults; the
// builders take the in/out widths so toy-sized stacks can reuse them.
struct ActorArch {
  int hidden_layers = 4;
  int hidden_width = 200;
  double preactivation_l2 = 1.0;
};

struct CriticArch {
  int state_layers = 3;
  int merged_layers = 4;
  int hidden_width = 400;
  double weight_decay = 1e-6;
};

// Policy: dense Elu stack ending in a tanh layer whose output is normalized
// to a unit direction.
template <class S>
struct Actor {
  using Scalar = S;

  Mlp<S> net;
  double preactivation_l2 = 1.0;
  mutable int degenerate_head_events = 0;

  static Actor random(int input_width, int action_dim, const ActorArch& arch,
                      Rng& rng) {
    std::vector<LayerSpec> specs;
    int in = input_width;
    for (int l = 0; l < arch.hidden_layers; ++l) {
      specs.push_back({in, arch.hidden_width, Activation::kElu, 0.0});
      in = arch.hidden_width;
    }
    specs.push_back({in, action_dim, Activation::kTanh, 0.0});
    Actor actor;
    actor.net = Mlp<S>::random(std::move(specs), rng);
    actor.preactivation_l2 = arch.preactivation_l2;
    return actor;
  }

  struct Cache {
    typename Mlp<S>::Cache net;
    MatX<S> unit;
    VecX<S> norms;
  };

  // Unit actions, one column per state.
  MatX<S> forward(const MatX<S>& state_input, Cache* cache = nullptr) const {
    typename Mlp<S>::Cache local;
    typename Mlp<S>::Cache* net_cache = cache ? &cache->net : &local;
    const MatX<S> tanh_out = net.forward(state_input, net_cache);
    int degenerate = 0;
    VecX<S> norms;
    MatX<S> unit = unit_normalize(tanh_out, &norms, &degenerate);
    degenerate_head_events += degenerate;
    if (cache) {
      cache->unit = unit;
      cache->norms = std::move(norms);
    }
    return unit;
  }

  // Gradients of loss + preactivation_l2 * mean ||pre_tanh||^2 given
  // d(loss)/d(action). Returns d(loss)/d(state input). The penalty term is
  // skipped when using the network purely as a Jacobian (target actors).
  MatX<S> backward(const Cache& cache, const MatX<S>& d_action,
                   typename Mlp<S>::Gradients* grads,
                   bool with_penalty = true) const {
    const MatX<S>& tanh_out = cache.net.post.back();
    const MatX<S> d_tanh =
        unit_normalize_backward(tanh_out, cache.unit, cache.norms, d_action);
    if (!with_penalty) {
      return net.backward(cache.net, d_tanh, grads);
    }
    const Eigen::Index n = d_action.cols();
    const MatX<S> pre_penalty =
        (S(2.0 * preactivation_l2 / static_cast<double>(n)) *
         cache.net.last_pre.array())
            .matrix();
    return net.backward(cache.net, d_tanh, grads, &pre_penalty);
  }

  // The penalty term matching backward(); callers add it to their loss.
  double preactivation_penalty(const Cache& cache) const {
    const auto& pre = cache.net.last_pre;
    return preactivation_l2 *
           static_cast<double>(pre.template cast<double>().squaredNorm()) /
           static_cast<double>(pre.cols());
  }
};

// State-action value: a state trunk, action concatenated after the trunk,
// then a merged stack with a linear scalar output.
template <class S>
struct Critic {
  Mlp<S> trunk;
  Mlp<S> head;

  static Critic random(int state_width, int action_dim,
                       const CriticArch& arch, Rng& rng) {
    std::vector<LayerSpec> trunk_specs;
    int in = state_width;
    for (int l = 0; l < arch.state_layers; ++l) {
      trunk_specs.push_back(
          {in, arch.hidden_width, Activation::kElu, arch.weight_decay});
      in = arch.hidden_width;
    }
    std::vector<LayerSpec> head_specs;
    in = arch.hidden_width + action_dim;
    for (int l = 0; l < arch.merged_layers; ++l) {
      head_specs.push_back(
          {in, arch.hidden_width, Activation::kElu, arch.weight_decay});
      in = arch.hidden_width;
    }
    head_specs.push_back({in, 1, Activation::kLinear, arch.weight_decay});
    Critic critic;
    critic.trunk = Mlp<S>::random(std::move(trunk_specs), rng);
    critic.head = Mlp<S>::random(std::move(head_specs), rng);
    return critic;
  }

  int action_dim() const {
    return head.input_width() - trunk.output_width();
  }

  struct Cache {
    typename Mlp<S>::Cache trunk;
    typename Mlp<S>::Cache head;
  };

  // Q values as a 1 x N row.
  MatX<S> forward(const MatX<S>& state_input, const MatX<S>& action,
                  Cache* cache = nullptr) const {
    typename Mlp<S>::Cache trunk_local, head_local;
    typename Mlp<S>::Cache* tc = cache ? &cache->trunk : &trunk_local;
    typename Mlp<S>::Cache* hc = cache ? &cache->head : &head_local;
    const MatX<S> h = trunk.forward(state_input, tc);
    MatX<S> merged(h.rows() + action.rows(), h.cols());
    merged << h, action;
    return head.forward(merged, hc);
  }

  // Backward from d(loss)/dQ. Parameter grads are optional so the actor
  // update can differentiate through a frozen critic; d_state / d_action
  // receive the input gradients when non-null.
  void backward(const Cache& cache, const MatX<S>& d_q,
                typename Mlp<S>::Gradients* trunk_grads,
                typename Mlp<S>::Gradients* head_grads, MatX<S>* d_state,
                MatX<S>* d_action) const {
    const MatX<S> d_merged = head.backward(cache.head, d_q, head_grads);
    const int trunk_out = trunk.output_width();
    if (d_action) {
      *d_action = d_merged.bottomRows(d_merged.rows() - trunk_out);
    }
    const MatX<S> d_h = d_merged.topRows(trunk_out);
    const MatX<S> d_in = trunk.backward(cache.trunk, d_h, trunk_grads);
    if (d_state) *d_state = d_in;
  }

  double weight_decay_loss() const {
    return trunk.weight_decay_loss() + head.weight_decay_loss();
  }

  // Trunk and head form one network: the gradient clip is global over both.
  void adam_step(const typename Mlp<S>::Gradients& trunk_grads,
                 const typename Mlp<S>::Gradients& head_grads,
                 const OptimizerConfig& cfg) {
    const double norm = std::sqrt(Mlp<S>::gradient_squared_norm(trunk_grads) +
                                  Mlp<S>::gradient_squared_norm(head_grads));
    const double scale =
        norm > cfg.gradient_clip_norm ? cfg.gradient_clip_norm / norm : 1.0;
    trunk.adam_apply(trunk_grads, cfg, scale);
    head.adam_apply(head_grads, cfg, scale);
  }

  template <class T>
  Critic<T> cast() const {
    Critic<T> out;
    out.trunk = trunk.template cast<T>();
    out.head = head.template cast<T>();
    return out;
  }
};

// Assembles network input columns [context; configuration].
template <class S>
MatX<S> stack_state(const std::vector<const Transition*>& batch, bool next) {
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index ctx = batch[0]->context.size();
  const Eigen::Index dof = batch[0]->c_from.size();
  MatX<S> out(ctx + dof, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Transition& t = *batch[i];
    out.col(i).head(ctx) = t.context.cast<S>();
    out.col(i).tail(dof) = (next ? t.c_to : t.c_from).template cast<S>();
  }
  return out;
}

template <class S>
MatX<S> stack_actions(const std::vector<const Transition*>& batch) {
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index dof = batch[0]->action.size();
  MatX<S> out(dof, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.col(i) = batch[i]->action.cast<S>();
  }
  return out;
}

template <class S>
MatX<S> state_input(const State& state) {
  MatX<S> out(state.context.size() + state.config.size(), 1);
  out.col(0).head(state.context.size()) = state.context.cast<S>();
  out.col(0).tail(state.config.size()) = state.config.cast<S>();
  return out;
}

}  // namespace nmp
