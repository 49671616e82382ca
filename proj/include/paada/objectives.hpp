/**
 * Copyright 2026 The paada Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

// Scalar objectives over the networks and their exact gradients, either with
// respect to the parameters (training) or to the input state (adversarial
// state generation).

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "paada/mlp.hpp"
#include "paada/transition.hpp"

namespace paada {

/// Clipped surrogate plus entropy bonus, maximized:
///   mean_t min(rho_t A_t, clip(rho_t, 1 - eps, 1 + eps) A_t) + c * mean_t H(pi(.|s_t))
/// with rho_t = exp(log pi(a_t|s_t) - log_prob_behavior_t).
struct PpoClipLoss {
  double clip_eps = 0.2;
  double entropy_coef = 0.0;
};

/// mean_t (V(s_t) - target_t)^2, minimized.
struct ValueRegressionLoss {};

struct ParamGradResult {
  double objective = 0.0;
  MlpParams gradient;
};

namespace detail {

inline std::vector<const Transition*> pointers(std::span<const Transition> batch) {
  std::vector<const Transition*> out;
  out.reserve(batch.size());
  for (const auto& t : batch) out.push_back(&t);
  return out;
}

inline void require_batch(std::size_t n) {
  if (n == 0) throw PreconditionError("objective evaluated on an empty batch");
}

inline double clip(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

}  // namespace detail

inline ParamGradResult grad_params(const PpoClipLoss& loss, const MlpParams& policy,
                                   std::span<const Transition* const> batch) {
  detail::require_batch(batch.size());
  const std::size_t n = batch.size(), k = policy.output_dim();
  ForwardTrace trace;
  const Matrix probs = softmax(forward(policy, stack_states(batch),
                                       &trace));
  Matrix dlogits(k, n);
  const double inv_n = 1.0 / static_cast<double>(n);
  double total = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    const Transition& t = *batch[c];
    const auto a = static_cast<std::size_t>(t.action);
    const double pa = probs(a, c);
    const double ratio = std::exp(floored_log(pa) - t.log_prob_behavior);
    const double unclipped = ratio * t.advantage;
    const double clipped = detail::clip(ratio, 1.0 - loss.clip_eps, 1.0 + loss.clip_eps) * t.advantage;
    total += std::min(unclipped, clipped);
    // d log pi(a)/d logits = onehot(a) - p, zero below the floor
    if (unclipped <= clipped && pa >= kProbFloor) {
      const double scale = unclipped * inv_n;
      for (std::size_t r = 0; r < k; ++r) dlogits(r, c) = scale * ((r == a ? 1.0 : 0.0) - probs(r, c));
    }
    if (loss.entropy_coef != 0.0) {
      const Matrix& logits = trace.activations.back();
      double mx = logits(0, c);
      for (std::size_t r = 1; r < k; ++r) mx = std::max(mx, logits(r, c));
      double lse = 0.0;
      for (std::size_t r = 0; r < k; ++r) lse += std::exp(logits(r, c) - mx);
      lse = mx + std::log(lse);
      double entropy = 0.0;
      for (std::size_t r = 0; r < k; ++r) entropy -= probs(r, c) * (logits(r, c) - lse);
      total += loss.entropy_coef * entropy;
      // dH/dz_r = -p_r (log p_r + H)
      for (std::size_t r = 0; r < k; ++r)
        dlogits(r, c) -= loss.entropy_coef * inv_n * probs(r, c) * ((logits(r, c) - lse) + entropy);
    }
  }
  ParamGradResult res{total * inv_n, policy.zeros_like()};
  backward(policy, trace, std::move(dlogits), &res.gradient, nullptr);
  return res;
}

inline ParamGradResult grad_params(const ValueRegressionLoss&, const MlpParams& value,
                                   std::span<const Transition* const> batch) {
  detail::require_batch(batch.size());
  const std::size_t n = batch.size();
  ForwardTrace trace;
  const Matrix out = forward(value, stack_states(batch), &trace);
  Matrix dout(1, n);
  const double inv_n = 1.0 / static_cast<double>(n);
  double total = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    const double residual = out(0, c) - batch[c]->target;
    total += residual * residual;
    dout(0, c) = 2.0 * residual * inv_n;
  }
  ParamGradResult res{total * inv_n, value.zeros_like()};
  backward(value, trace, std::move(dout), &res.gradient, nullptr);
  return res;
}

template <typename Loss>
ParamGradResult grad_params(const Loss& loss, const MlpParams& params, std::span<const Transition> batch) {
  const auto ptrs = detail::pointers(batch);
  return grad_params(loss, params, std::span<const Transition* const>(ptrs));
}

enum class InputObjectiveKind {
  log_prob,  ///< log pi(a_t | s)
  value,     ///< V(s)
  paada,     ///< log pi(a_t | s) (target_t - V(s)) + gamma ||s - anchor||^2
};

struct InputObjective {
  InputObjectiveKind kind = InputObjectiveKind::paada;
  double lagrangian = 0.0;
  /// Treat V(s) inside the paada objective as a constant when differentiating.
  bool value_detached = false;
};

/// Objective values and input gradients for a batch of states.
struct InputGradBatch {
  std::vector<double> objective;
  Matrix gradient;  // same shape as the state matrix
};

/// Evaluates an input objective at the columns of `states`. `actions` and
/// `targets` come from the transitions being perturbed; `anchors` holds the
/// original states (only read by the paada objective).
inline InputGradBatch input_value_and_grad(const InputObjective& obj, const MlpParams& policy,
                                           const MlpParams& value, const Matrix& states, std::span<const int> actions,
                                           std::span<const double> targets, const Matrix& anchors) {
  const std::size_t n = states.cols, dim = states.rows;
  if (obj.lagrangian < 0.0) throw PreconditionError("lagrangian weight must be non-negative");
  if (obj.kind == InputObjectiveKind::paada && (anchors.rows != dim || anchors.cols != n))
    throw ShapeError("anchor dimension does not match state dimension");
  for (double v : states.data)
    if (!std::isfinite(v)) throw NumericError("non-finite state entry");

  InputGradBatch res;
  res.objective.assign(n, 0.0);

  if (obj.kind == InputObjectiveKind::value) {
    ForwardTrace trace;
    const Matrix out = forward(value, states, &trace);
    for (std::size_t c = 0; c < n; ++c) res.objective[c] = out(0, c);
    backward(value, trace, Matrix(1, n, 1.0), nullptr, &res.gradient);
    return res;
  }

  if (actions.size() != n) throw ShapeError("one action per state required");
  ForwardTrace ptrace;
  const Matrix probs = softmax(forward(policy, states, &ptrace));
  const std::size_t k = policy.output_dim();
  std::vector<double> logp(n);
  for (std::size_t c = 0; c < n; ++c) {
    if (actions[c] < 0 || static_cast<std::size_t>(actions[c]) >= k) throw ShapeError("action outside policy support");
    logp[c] = floored_log(probs(static_cast<std::size_t>(actions[c]), c));
  }

  // weight on d log pi / d logits per column
  std::vector<double> lp_weight(n, 1.0);
  Matrix vgrad;
  if (obj.kind == InputObjectiveKind::paada) {
    if (targets.size() != n) throw ShapeError("one target per state required");
    ForwardTrace vtrace;
    const Matrix v = forward(value, states, &vtrace);
    Matrix dv(1, n);
    for (std::size_t c = 0; c < n; ++c) {
      const double adv = targets[c] - v(0, c);
      double dist = 0.0;
      for (std::size_t r = 0; r < dim; ++r) {
        const double d = states(r, c) - anchors(r, c);
        dist += d * d;
      }
      res.objective[c] = logp[c] * adv + obj.lagrangian * dist;
      lp_weight[c] = adv;
      dv(0, c) = -logp[c];
    }
    if (!obj.value_detached) backward(value, vtrace, std::move(dv), nullptr, &vgrad);
  } else {
    res.objective = logp;
  }

  Matrix dlogits(k, n);
  for (std::size_t c = 0; c < n; ++c) {
    const auto a = static_cast<std::size_t>(actions[c]);
    if (probs(a, c) < kProbFloor) continue;
    for (std::size_t r = 0; r < k; ++r) dlogits(r, c) = lp_weight[c] * ((r == a ? 1.0 : 0.0) - probs(r, c));
  }
  backward(policy, ptrace, std::move(dlogits), nullptr, &res.gradient);

  if (obj.kind == InputObjectiveKind::paada) {
    if (!vgrad.data.empty())
      for (std::size_t e = 0; e < res.gradient.data.size(); ++e) res.gradient.data[e] += vgrad.data[e];
    for (std::size_t r = 0; r < dim; ++r)
      for (std::size_t c = 0; c < n; ++c)
        res.gradient(r, c) += 2.0 * obj.lagrangian * (states(r, c) - anchors(r, c));
  }
  return res;
}

/// Gradient of an input objective at `state` for one transition's action and
/// target.
inline std::vector<double> grad_input(const InputObjective& obj, const MlpParams& policy, const MlpParams& value,
                                      const Transition& t, std::span<const double> state,
                                      std::span<const double> anchor) {
  if (anchor.size() != state.size()) throw ShapeError("anchor dimension does not match state dimension");
  const int action = t.action;
  const double target = t.target;
  auto res = input_value_and_grad(obj, policy, value, Matrix::column(state), std::span<const int>(&action, 1),
                                  std::span<const double>(&target, 1), Matrix::column(anchor));
  return res.gradient.data;
}

inline double input_objective(const InputObjective& obj, const MlpParams& policy, const MlpParams& value,
                              const Transition& t, std::span<const double> state, std::span<const double> anchor) {
  if (anchor.size() != state.size()) throw ShapeError("anchor dimension does not match state dimension");
  const int action = t.action;
  const double target = t.target;
  auto res = input_value_and_grad(obj, policy, value, Matrix::column(state), std::span<const int>(&action, 1),
                                  std::span<const double>(&target, 1), Matrix::column(anchor));
  return res.objective.front();
}

}  // namespace paada
