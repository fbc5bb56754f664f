#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "nmp/rng.hpp"
#include "nmp/types.hpp"

namespace nmp {

enum class Activation { kLinear, kElu, kTanh, kSoftmax };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct LayerSpec {
  int input_width = 0;
  int output_width = 0;
  Activation activation = Activation::kLinear;
  // L2 weight penalty: adds weight_decay * sum(W^2) to the loss.
  double weight_decay = 0.0;
};

struct OptimizerConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double gradient_clip_norm = 1.0;
};

template <class S>
MatX<S> apply_activation(Activation act, MatX<S> pre) {
  switch (act) {
    case Activation::kLinear:
      return pre;
    case Activation::kElu:
      pre.array() =
          pre.array().max(S(0)) + (pre.array().min(S(0)).exp() - S(1));
      return pre;
    case Activation::kTanh:
      return pre.array().tanh();
    case Activation::kSoftmax: {
      MatX<S> out(pre.rows(), pre.cols());
      for (Eigen::Index j = 0; j < pre.cols(); ++j) {
        const S m = pre.col(j).maxCoeff();
        VecX<S> e = (pre.col(j).array() - m).exp();
        out.col(j) = e / e.sum();
      }
      return out;
    }
  }
  throw std::logic_error("unknown activation");
}

// d(loss)/d(pre) from d(loss)/d(post). Every activation here has a
// derivative expressible through its output alone.
template <class S>
MatX<S> activation_backward(Activation act, const MatX<S>& post,
                            const MatX<S>& d_post) {
  switch (act) {
    case Activation::kLinear:
      return d_post;
    case Activation::kElu:
      // f' = 1 where f > 0 and f + 1 otherwise, i.e. 1 + min(f, 0).
      return (S(1) + post.array().min(S(0))) * d_post.array();
    case Activation::kTanh:
      return (S(1) - post.array().square()) * d_post.array();
    case Activation::kSoftmax: {
      MatX<S> out(post.rows(), post.cols());
      for (Eigen::Index j = 0; j < post.cols(); ++j) {
        const S dot = post.col(j).dot(d_post.col(j));
        out.col(j) =
            post.col(j).array() * (d_post.col(j).array() - dot);
      }
      return out;
    }
  }
  throw std::logic_error("unknown activation");
}

// Dense stack with per-layer Adam state. Matrices hold one sample per
// column, so a single-vector pass is just the one-column case.
template <class S>
struct Mlp {
  std::vector<LayerSpec> specs;
  std::vector<MatX<S>> weights;
  std::vector<VecX<S>> biases;
  std::vector<MatX<S>> m_w, v_w;
  std::vector<VecX<S>> m_b, v_b;
  long step_count = 0;

  int input_width() const { return specs.empty() ? 0 : specs.front().input_width; }
  int output_width() const { return specs.empty() ? 0 : specs.back().output_width; }
  int layer_count() const { return static_cast<int>(specs.size()); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
    }
    return n;
  }

  // Uniform +-1/sqrt(fan_in) initialization, zero biases and Adam state.
  static Mlp random(std::vector<LayerSpec> layer_specs, Rng& rng) {
    for (std::size_t l = 0; l + 1 < layer_specs.size(); ++l) {
      if (layer_specs[l].output_width != layer_specs[l + 1].input_width) {
        throw std::invalid_argument("layer width mismatch at layer " +
                                    std::to_string(l));
      }
    }
    Mlp net;
    net.specs = std::move(layer_specs);
    for (const LayerSpec& spec : net.specs) {
      const double bound = 1.0 / std::sqrt(spec.input_width);
      MatX<S> w(spec.output_width, spec.input_width);
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
          w(i, j) = static_cast<S>(rng.uniform(-bound, bound));
        }
      }
      net.weights.push_back(std::move(w));
      net.biases.push_back(VecX<S>::Zero(spec.output_width));
      net.m_w.push_back(MatX<S>::Zero(spec.output_width, spec.input_width));
      net.v_w.push_back(MatX<S>::Zero(spec.output_width, spec.input_width));
      net.m_b.push_back(VecX<S>::Zero(spec.output_width));
      net.v_b.push_back(VecX<S>::Zero(spec.output_width));
    }
    return net;
  }

  // Backward needs each layer's output and, only for the final layer (the
  // pre-tanh penalty and logit readouts), its pre-activations.
  struct Cache {
    MatX<S> input;
    std::vector<MatX<S>> post;
    MatX<S> last_pre;
  };

  MatX<S> forward(const MatX<S>& input, Cache* cache = nullptr) const {
    if (input.rows() != input_width()) {
      throw std::invalid_argument("input width mismatch: got " +
                                  std::to_string(input.rows()) + ", want " +
                                  std::to_string(input_width()));
    }
    if (cache) {
      cache->input = input;
      cache->post.clear();
      cache->post.reserve(specs.size());
      const MatX<S>* cur = &cache->input;
      for (std::size_t l = 0; l < specs.size(); ++l) {
        MatX<S> pre = (weights[l] * (*cur)).colwise() + biases[l];
        if (l + 1 == specs.size()) cache->last_pre = pre;
        cache->post.emplace_back(
            apply_activation(specs[l].activation, std::move(pre)));
        cur = &cache->post.back();
      }
      return cache->post.back();
    }
    MatX<S> x = (weights[0] * input).colwise() + biases[0];
    x = apply_activation(specs[0].activation, x);
    for (std::size_t l = 1; l < specs.size(); ++l) {
      MatX<S> pre = (weights[l] * x).colwise() + biases[l];
      x = apply_activation(specs[l].activation, pre);
    }
    return x;
  }

  struct Gradients {
    std::vector<MatX<S>> d_w;
    std::vector<VecX<S>> d_b;

    static Gradients zero_like(const Mlp& net) {
      Gradients g = sized(net);
      for (auto& m : g.d_w) m.setZero();
      for (auto& v : g.d_b) v.setZero();
      return g;
    }

    // Shape-only allocation; backward overwrites every entry.
    static Gradients sized(const Mlp& net) {
      Gradients g;
      for (std::size_t l = 0; l < net.weights.size(); ++l) {
        g.d_w.emplace_back(net.weights[l].rows(), net.weights[l].cols());
        g.d_b.emplace_back(net.biases[l].size());
      }
      return g;
    }
  };

  // Reverse pass. Returns d(loss)/d(input); overwrites parameter gradients
  // (including weight-decay terms) when `grads` is given. `last_pre_extra`,
  // when present, is added to the gradient at the final layer's
  // pre-activations (used for the actor's pre-tanh penalty).
  MatX<S> backward(const Cache& cache, const MatX<S>& d_output,
                   Gradients* grads = nullptr,
                   const MatX<S>* last_pre_extra = nullptr) const {
    MatX<S> d_post = d_output;
    MatX<S> d_x;
    for (int l = layer_count() - 1; l >= 0; --l) {
      MatX<S> d_pre =
          activation_backward(specs[l].activation, cache.post[l], d_post);
      if (last_pre_extra && l == layer_count() - 1) {
        d_pre += *last_pre_extra;
      }
      const MatX<S>& layer_in = (l == 0) ? cache.input : cache.post[l - 1];
      if (grads) {
        grads->d_w[l].noalias() = d_pre * layer_in.transpose();
        if (specs[l].weight_decay != 0.0) {
          grads->d_w[l] += S(2 * specs[l].weight_decay) * weights[l];
        }
        grads->d_b[l] = d_pre.rowwise().sum();
      }
      d_x.noalias() = weights[l].transpose() * d_pre;
      d_post = std::move(d_x);
    }
    return d_post;
  }

  // Sum of weight_decay * ||W||^2 over layers; the loss term matching the
  // gradients added in backward().
  double weight_decay_loss() const {
    double loss = 0.0;
    for (std::size_t l = 0; l < specs.size(); ++l) {
      if (specs[l].weight_decay != 0.0) {
        loss += specs[l].weight_decay *
                static_cast<double>(weights[l].template cast<double>()
                                        .squaredNorm());
      }
    }
    return loss;
  }

  // Squared global L2 norm of the gradients; throws on non-finite entries,
  // naming the offending layer.
  static double gradient_squared_norm(const Gradients& grads) {
    double sq_norm = 0.0;
    for (std::size_t l = 0; l < grads.d_w.size(); ++l) {
      if (!grads.d_w[l].allFinite() || !grads.d_b[l].allFinite()) {
        throw std::runtime_error("non-finite gradient at layer " +
                                 std::to_string(l));
      }
      sq_norm += static_cast<double>(
          grads.d_w[l].template cast<double>().squaredNorm());
      sq_norm += static_cast<double>(
          grads.d_b[l].template cast<double>().squaredNorm());
    }
    return sq_norm;
  }

  // Global-norm clip followed by one bias-corrected Adam step.
  void adam_step(const Gradients& grads, const OptimizerConfig& cfg) {
    const double norm = std::sqrt(gradient_squared_norm(grads));
    const double scale =
        norm > cfg.gradient_clip_norm ? cfg.gradient_clip_norm / norm : 1.0;
    adam_apply(grads, cfg, scale);
  }

  // One Adam step with pre-scaled gradients (the caller owns clipping, e.g.
  // jointly over several stacks that form one network).
  void adam_apply(const Gradients& grads, const OptimizerConfig& cfg,
                  double pre_scale) {
    const S scale = static_cast<S>(pre_scale);
    ++step_count;
    const double bc1 = 1.0 - std::pow(cfg.beta1, step_count);
    const double bc2 = 1.0 - std::pow(cfg.beta2, step_count);
    const S b1 = static_cast<S>(cfg.beta1);
    const S b2 = static_cast<S>(cfg.beta2);
    const S lr = static_cast<S>(cfg.learning_rate);
    const S eps = static_cast<S>(cfg.epsilon);
    const S ibc1 = static_cast<S>(1.0 / bc1);
    const S ibc2 = static_cast<S>(1.0 / bc2);

    for (std::size_t l = 0; l < weights.size(); ++l) {
      m_w[l] = b1 * m_w[l] + ((S(1) - b1) * scale) * grads.d_w[l];
      v_w[l].array() = b2 * v_w[l].array() +
                       ((S(1) - b2) * scale * scale) *
                           grads.d_w[l].array().square();
      m_b[l] = b1 * m_b[l] + ((S(1) - b1) * scale) * grads.d_b[l];
      v_b[l].array() = b2 * v_b[l].array() +
                       ((S(1) - b2) * scale * scale) *
                           grads.d_b[l].array().square();
      weights[l].array() -=
          lr * (m_w[l].array() * ibc1) /
          ((v_w[l].array() * ibc2).sqrt() + eps);
      biases[l].array() -=
          lr * (m_b[l].array() * ibc1) /
          ((v_b[l].array() * ibc2).sqrt() + eps);
    }
  }

  bool all_finite() const {
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
    }
    return true;
  }

  template <class T>
  Mlp<T> cast() const {
    Mlp<T> out;
    out.specs = specs;
    out.step_count = step_count;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      out.weights.push_back(weights[l].template cast<T>());
      out.biases.push_back(biases[l].template cast<T>());
      out.m_w.push_back(m_w[l].template cast<T>());
      out.v_w.push_back(v_w[l].template cast<T>());
      out.m_b.push_back(m_b[l].template cast<T>());
      out.v_b.push_back(v_b[l].template cast<T>());
    }
    return out;
  }
};

// target <- tau * online + (1 - tau) * target, per parameter.
template <class S>
void soft_update(Mlp<S>& target, const Mlp<S>& online, double tau) {
  if (target.weights.size() != online.weights.size()) {
    throw std::invalid_argument("soft_update shape mismatch");
  }
  const S t = static_cast<S>(tau);
  for (std::size_t l = 0; l < target.weights.size(); ++l) {
    if (target.weights[l].rows() != online.weights[l].rows() ||
        target.weights[l].cols() != online.weights[l].cols()) {
      throw std::invalid_argument("soft_update shape mismatch at layer " +
                                  std::to_string(l));
    }
    target.weights[l] = t * online.weights[l] + (S(1) - t) * target.weights[l];
    target.biases[l] = t * online.biases[l] + (S(1) - t) * target.biases[l];
  }
}

inline constexpr double kUnitHeadFloor = 1e-8;

// Direction head: a = tanh_out / ||tanh_out|| per column. Columns whose tanh
// norm falls below kUnitHeadFloor emit the first basis vector instead and are
// counted in `degenerate`.
template <class S>
MatX<S> unit_normalize(const MatX<S>& tanh_out, VecX<S>* norms_out = nullptr,
                       int* degenerate = nullptr) {
  MatX<S> out(tanh_out.rows(), tanh_out.cols());
  if (norms_out) norms_out->resize(tanh_out.cols());
  for (Eigen::Index j = 0; j < tanh_out.cols(); ++j) {
    const S norm = tanh_out.col(j).norm();
    if (norms_out) (*norms_out)[j] = norm;
    if (static_cast<double>(norm) < kUnitHeadFloor) {
      out.col(j).setZero();
      out(0, j) = S(1);
      if (degenerate) ++(*degenerate);
    } else {
      out.col(j) = tanh_out.col(j) / norm;
    }
  }
  return out;
}

// d(loss)/d(tanh_out) from d(loss)/d(unit): (I - a a^T) / ||t|| applied
// per column; zero for degenerate columns.
template <class S>
MatX<S> unit_normalize_backward(const MatX<S>& tanh_out, const MatX<S>& unit,
                                const VecX<S>& norms, const MatX<S>& d_unit) {
  MatX<S> out(tanh_out.rows(), tanh_out.cols());
  for (Eigen::Index j = 0; j < tanh_out.cols(); ++j) {
    if (static_cast<double>(norms[j]) < kUnitHeadFloor) {
      out.col(j).setZero();
      continue;
    }
    const S dot = unit.col(j).dot(d_unit.col(j));
    out.col(j) = (d_unit.col(j) - dot * unit.col(j)) / norms[j];
  }
  return out;
}

}  // namespace nmp
