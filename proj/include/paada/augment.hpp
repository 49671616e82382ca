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

// Policy-aware adversarial augmentation of trajectories.
//
// Each transition (s_t, a_t, r_t) gets an adversarial counterpart
// (s_hat, a_t, r_t) where s_hat descends
//
//   J(s) = log pi(a_t | s) (r_t - V(s)) + gamma ||s - s_t||^2
//
// from s = s_t with a fixed step size, stopping once ||grad J||^2 falls
// below the tolerance or after max_steps steps. Actions and rewards are never
// changed. A fraction nu of a trajectory's positions is then replaced by
// adversarial transitions, and the result can be further mixed with a
// shuffled copy of itself (mixup).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "paada/env.hpp"
#include "paada/mlp.hpp"
#include "paada/objectives.hpp"
#include "paada/parallel.hpp"
#include "paada/random.hpp"
#include "paada/transition.hpp"

namespace paada {

struct AdvGenConfig {
  double stepsize = 10.0;
  int max_steps = 50;
  double tolerance = 5e-6;
  double lagrangian = 0.01;
  bool value_detached = false;
  bool clip_to_obs_bounds = true;

  void validate() const {
    if (!(stepsize > 0.0)) throw ConfigError("adv.stepsize must be positive");
    if (max_steps < 0) throw ConfigError("adv.max_steps must be non-negative");
    if (!(tolerance > 0.0)) throw ConfigError("adv.tolerance must be positive");
    if (!(lagrangian >= 0.0)) throw ConfigError("adv.lagrangian must be non-negative");
  }
};

struct MixupConfig {
  double alpha = 0.2;
  double beta = 0.2;
  /// Use this lambda instead of drawing one (diagnostics and equivalence runs).
  std::optional<double> forced_lambda;

  void validate() const {
    if (!(alpha > 0.0) || !(beta > 0.0)) throw ConfigError("mixup.alpha and mixup.beta must be positive");
    if (forced_lambda && !(*forced_lambda >= 0.0 && *forced_lambda <= 1.0))
      throw ConfigError("mixup.forced_lambda must lie in [0, 1]");
  }
};

/// Beta shape used with alpha = 0.2 at a given training fraction xi:
/// 0.2 for the full set, 0.5 from half of it, 1 below that.
inline double default_mixup_beta(double xi) {
  if (xi >= 1.0) return 0.2;
  if (xi >= 0.5) return 0.5;
  return 1.0;
}

inline double paada_objective(const MlpParams& policy, const MlpParams& value, std::span<const double> state,
                              const Transition& t, std::span<const double> anchor, double lagrangian) {
  return input_objective({InputObjectiveKind::paada, lagrangian, false}, policy, value, t, state, anchor);
}

struct AdversarialState {
  std::vector<double> state;
  /// Gradient steps actually taken.
  int steps = 0;
  /// ||grad J||^2 at the last convergence check.
  double last_grad_sq = 0.0;
};

namespace detail {

inline void generate_chunk(const MlpParams& policy, const MlpParams& value, std::span<const Transition* const> batch,
                           const AdvGenConfig& cfg, const ObsBounds* bounds, std::span<AdversarialState> out) {
  const std::size_t n = batch.size();
  const InputObjective obj{InputObjectiveKind::paada, cfg.lagrangian, cfg.value_detached};
  const bool clip = cfg.clip_to_obs_bounds && bounds != nullptr;
  for (std::size_t i = 0; i < n; ++i) {
    out[i].state = batch[i]->state;
    out[i].steps = 0;
    out[i].last_grad_sq = 0.0;
  }
  std::vector<std::size_t> active(n);
  std::iota(active.begin(), active.end(), 0);
  for (int k = 1; k <= cfg.max_steps && !active.empty(); ++k) {
    const std::size_t m = active.size();
    const std::size_t dim = batch[active[0]]->state.size();
    Matrix states(dim, m), anchors(dim, m);
    std::vector<int> actions(m);
    std::vector<double> targets(m);
    for (std::size_t c = 0; c < m; ++c) {
      const std::size_t i = active[c];
      states.set_col(c, out[i].state);
      anchors.set_col(c, batch[i]->state);
      actions[c] = batch[i]->action;
      targets[c] = batch[i]->target;
    }
    const InputGradBatch g = input_value_and_grad(obj, policy, value, states, actions, targets, anchors);
    std::vector<std::size_t> still_active;
    still_active.reserve(m);
    for (std::size_t c = 0; c < m; ++c) {
      const std::size_t i = active[c];
      double sq = 0.0;
      for (std::size_t r = 0; r < dim; ++r) sq += g.gradient(r, c) * g.gradient(r, c);
      out[i].last_grad_sq = sq;
      if (!std::isfinite(sq))
        throw NumericError("adversarial generation produced a non-finite gradient at step " + std::to_string(k));
      if (sq < cfg.tolerance) continue;
      auto& s = out[i].state;
      for (std::size_t r = 0; r < dim; ++r) {
        s[r] -= cfg.stepsize * g.gradient(r, c);
        if (clip) s[r] = std::min(std::max(s[r], bounds->lower[r]), bounds->upper[r]);
        if (!std::isfinite(s[r]))
          throw NumericError("adversarial generation produced a non-finite state at step " + std::to_string(k));
      }
      out[i].steps = k;
      still_active.push_back(i);
    }
    active = std::move(still_active);
  }
}

}  // namespace detail

/// Runs the adversarial descent for every transition in `batch`. Transitions
/// are independent; they are processed in lockstep chunks across workers and
/// each result is identical to running it alone.
inline std::vector<AdversarialState> generate_adversarial_states(const MlpParams& policy, const MlpParams& value,
                                                                 std::span<const Transition* const> batch,
                                                                 const AdvGenConfig& cfg,
                                                                 const ObsBounds* bounds = nullptr) {
  cfg.validate();
  if (bounds && cfg.clip_to_obs_bounds)
    for (const Transition* t : batch)
      if (t->state.size() != bounds->lower.size()) throw ShapeError("observation bounds do not match state size");
  std::vector<AdversarialState> out(batch.size());
  constexpr std::size_t kChunk = 64;
  const std::size_t chunks = (batch.size() + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t ci) {
    const std::size_t lo = ci * kChunk, hi = std::min(batch.size(), lo + kChunk);
    detail::generate_chunk(policy, value, batch.subspan(lo, hi - lo), cfg, bounds,
                           std::span<AdversarialState>(out).subspan(lo, hi - lo));
  });
  return out;
}

inline AdversarialState generate_adversarial_state(const MlpParams& policy, const MlpParams& value,
                                                   const Transition& transition, const AdvGenConfig& cfg,
                                                   const ObsBounds* bounds = nullptr) {
  for (double v : transition.state)
    if (!std::isfinite(v)) throw NumericError("adversarial generation started from a non-finite state");
  const Transition* ptr = &transition;
  return generate_adversarial_states(policy, value, std::span<const Transition* const>(&ptr, 1), cfg, bounds).front();
}

/// Running totals of the generation statistics reported per epoch.
struct AdvStats {
  std::size_t count = 0;
  double total_steps = 0.0;
  double total_grad_norm = 0.0;
  double total_shift = 0.0;

  double mean_steps() const { return count ? total_steps / static_cast<double>(count) : 0.0; }
  double mean_grad_norm() const { return count ? total_grad_norm / static_cast<double>(count) : 0.0; }
  double mean_shift() const { return count ? total_shift / static_cast<double>(count) : 0.0; }

  AdvStats& operator+=(const AdvStats& o) {
    count += o.count;
    total_steps += o.total_steps;
    total_grad_norm += o.total_grad_norm;
    total_shift += o.total_shift;
    return *this;
  }
};

/// Adversarial counterparts of the transitions at `positions`: state
/// replaced, action/reward/target kept, V and log pi re-evaluated at the new
/// state, advantage = target - V(s_hat).
inline std::vector<Transition> build_adversarial_transitions(const Trajectory& traj,
                                                             std::span<const std::size_t> positions,
                                                             const MlpParams& policy, const MlpParams& value,
                                                             const AdvGenConfig& cfg, const ObsBounds* bounds,
                                                             AdvStats* stats = nullptr) {
  std::vector<const Transition*> sources;
  sources.reserve(positions.size());
  for (auto p : positions) sources.push_back(&traj.transitions.at(p));
  if (sources.empty()) return {};
  const auto generated = generate_adversarial_states(policy, value, sources, cfg, bounds);

  std::vector<Transition> out;
  out.reserve(sources.size());
  Matrix states(sources.front()->state.size(), sources.size());
  for (std::size_t c = 0; c < sources.size(); ++c) states.set_col(c, generated[c].state);
  const Matrix probs = policy_forward_batch(policy, states);
  const auto values = value_forward_batch(value, states);
  for (std::size_t c = 0; c < sources.size(); ++c) {
    Transition t = *sources[c];
    t.state = generated[c].state;
    t.value_est = values[c];
    t.advantage = t.target - values[c];
    t.log_prob_behavior = floored_log(probs(static_cast<std::size_t>(t.action), c));
    t.adversarial = true;
    if (stats) {
      double shift = 0.0;
      for (std::size_t r = 0; r < t.state.size(); ++r) {
        const double d = t.state[r] - sources[c]->state[r];
        shift += d * d;
      }
      ++stats->count;
      stats->total_steps += generated[c].steps;
      stats->total_grad_norm += std::sqrt(generated[c].last_grad_sq);
      stats->total_shift += std::sqrt(shift);
    }
    out.push_back(std::move(t));
  }
  return out;
}

/// One adversarial transition per source transition.
inline Trajectory build_adversarial_trajectory(const Trajectory& traj, const MlpParams& policy,
                                               const MlpParams& value, const AdvGenConfig& cfg,
                                               const ObsBounds* bounds = nullptr, AdvStats* stats = nullptr) {
  std::vector<std::size_t> all(traj.size());
  std::iota(all.begin(), all.end(), 0);
  Trajectory out;
  out.level = traj.level;
  out.next_state = traj.next_state;
  out.transitions = build_adversarial_transitions(traj, all, policy, value, cfg, bounds, stats);
  return out;
}

/// floor(nu * n), robust to representation error in nu.
inline std::size_t merge_count(std::size_t n, double nu) {
  if (!(nu >= 0.0 && nu <= 1.0)) throw ConfigError("augmentation degree nu must lie in [0, 1]");
  return std::min(n, static_cast<std::size_t>(std::floor(nu * static_cast<double>(n) + 1e-9)));
}

/// floor(nu * n) distinct positions in increasing order, uniform over subsets.
/// Draws nothing from `rng` when the selection is empty.
inline std::vector<std::size_t> select_merge_positions(std::size_t n, double nu, Rng& rng) {
  const std::size_t k = merge_count(n, nu);
  std::vector<std::size_t> out;
  if (k == 0) return out;
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  out.reserve(k);
  std::sample(idx.begin(), idx.end(), std::back_inserter(out), static_cast<std::ptrdiff_t>(k), rng);
  return out;
}

/// Takes the adversarial transition at floor(nu |tau|) random positions and
/// the original everywhere else, keeping temporal order.
inline Trajectory merge_trajectories(const Trajectory& tau, const Trajectory& tau_hat, double nu, Rng& rng) {
  if (tau.size() != tau_hat.size())
    throw PreconditionError("merge needs trajectories of equal length (" + std::to_string(tau.size()) + " vs " +
                            std::to_string(tau_hat.size()) + ")");
  Trajectory out = tau;
  for (auto p : select_merge_positions(tau.size(), nu, rng)) out[p] = tau_hat[p];
  return out;
}

/// Mixup with an explicit weight and pairing: position t is combined with
/// position perm[t] of the same trajectory. The action stays with probability
/// lambda (one coin per position); log pi of the chosen action is re-evaluated
/// at the mixed state.
inline Trajectory mixup_with(const Trajectory& traj, double lambda, std::span<const std::size_t> perm, Rng& coin_rng,
                             const MlpParams& policy) {
  if (traj.empty()) throw PreconditionError("mixup on an empty trajectory");
  if (perm.size() != traj.size()) throw PreconditionError("mixup permutation has the wrong length");
  const double mu = 1.0 - lambda;
  Trajectory out;
  out.level = traj.level;
  out.next_state = traj.next_state;
  out.transitions.reserve(traj.size());
  for (std::size_t t = 0; t < traj.size(); ++t) {
    const Transition& a = traj[t];
    const Transition& b = traj[perm[t]];
    Transition m = a;
    for (std::size_t r = 0; r < m.state.size(); ++r) m.state[r] = lambda * a.state[r] + mu * b.state[r];
    m.reward = lambda * a.reward + mu * b.reward;
    m.target = lambda * a.target + mu * b.target;
    m.advantage = lambda * a.advantage + mu * b.advantage;
    m.value_est = lambda * a.value_est + mu * b.value_est;
    m.action = coin_rng.uniform() < lambda ? a.action : b.action;
    out.transitions.push_back(std::move(m));
  }
  const Matrix probs = policy_forward_batch(policy, stack_states(std::span<const Transition>(out.transitions)));
  for (std::size_t t = 0; t < out.size(); ++t)
    out[t].log_prob_behavior = floored_log(probs(static_cast<std::size_t>(out[t].action), t));
  return out;
}

/// Draws lambda ~ Beta(alpha, beta) (unless forced), a uniform permutation,
/// and mixes the trajectory with its shuffled copy.
inline Trajectory mixup_trajectory(const Trajectory& traj, const MixupConfig& cfg, Rng& rng,
                                   const MlpParams& policy) {
  cfg.validate();
  const double lambda = cfg.forced_lambda ? *cfg.forced_lambda : sample_beta(cfg.alpha, cfg.beta, rng);
  std::vector<std::size_t> perm(traj.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  return mixup_with(traj, lambda, perm, rng, policy);
}

}  // namespace paada
