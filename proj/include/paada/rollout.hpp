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

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "paada/env.hpp"
#include "paada/mlp.hpp"
#include "paada/random.hpp"
#include "paada/transition.hpp"

namespace paada {

enum class AdvantageEstimator {
  immediate,          ///< A_t = r_t - V(s_t)
  discounted_return,  ///< A_t = G_t - V(s_t), G_t the discounted return-to-go
  gae,                ///< generalized advantage estimation, target = A_t + V(s_t)
};

struct AdvantageOptions {
  AdvantageEstimator estimator = AdvantageEstimator::immediate;
  double discount = 0.999;
  double gae_lambda = 0.95;
};

/// Inverse-CDF draw from a probability vector.
inline int sample_action(std::span<const double> probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t a = 0; a < probs.size(); ++a) {
    acc += probs[a];
    if (u < acc) return static_cast<int>(a);
  }
  return static_cast<int>(probs.size()) - 1;
}

/// Runs the policy for exactly `length` steps starting from a fresh reset,
/// re-resetting whenever an episode ends. Records V(s_t) and
/// log pi(a_t|s_t) as seen at collection time; target and advantage start
/// out under the immediate estimator.
inline Trajectory collect_trajectory(const MlpParams& policy, const MlpParams& value, Environment& env,
                                     std::size_t length, Rng& rng) {
  if (length == 0) throw PreconditionError("trajectory length must be positive");
  Trajectory traj;
  traj.level = env.spec();
  traj.transitions.reserve(length);
  std::vector<double> obs = env.reset();
  for (std::size_t t = 0; t < length; ++t) {
    const auto probs = policy_forward(policy, obs);
    Transition tr;
    tr.value_est = value_forward(value, obs);
    tr.action = sample_action(probs, rng);
    tr.log_prob_behavior = floored_log(probs[static_cast<std::size_t>(tr.action)]);
    StepResult step = env.step(tr.action);
    tr.state = std::move(obs);
    tr.reward = step.reward;
    tr.target = step.reward;
    tr.advantage = tr.reward - tr.value_est;
    tr.done = step.done;
    traj.transitions.push_back(std::move(tr));
    obs = step.done ? env.reset() : std::move(step.observation);
  }
  traj.next_state = std::move(obs);
  return traj;
}

/// Re-evaluates V at every state and fills target/advantage. An episode cut
/// off by the end of the window bootstraps from V(next_state).
inline Trajectory compute_advantages(Trajectory traj, const MlpParams& value, const AdvantageOptions& opts = {}) {
  if (traj.empty()) throw PreconditionError("compute_advantages on an empty trajectory");
  const auto values = value_forward_batch(value, stack_states(std::span<const Transition>(traj.transitions)));
  const std::size_t n = traj.size();
  for (std::size_t t = 0; t < n; ++t) traj[t].value_est = values[t];

  switch (opts.estimator) {
    case AdvantageEstimator::immediate:
      for (auto& tr : traj.transitions) {
        tr.target = tr.reward;
        tr.advantage = tr.reward - tr.value_est;
      }
      break;
    case AdvantageEstimator::discounted_return: {
      double ret = traj.transitions.back().done ? 0.0 : value_forward(value, traj.next_state);
      for (std::size_t t = n; t-- > 0;) {
        auto& tr = traj[t];
        ret = tr.reward + (tr.done ? 0.0 : opts.discount * ret);
        tr.target = ret;
        tr.advantage = ret - tr.value_est;
      }
      break;
    }
    case AdvantageEstimator::gae: {
      double next_value = traj.transitions.back().done ? 0.0 : value_forward(value, traj.next_state);
      double gae = 0.0;
      for (std::size_t t = n; t-- > 0;) {
        auto& tr = traj[t];
        const double nv = tr.done ? 0.0 : next_value;
        const double delta = tr.reward + opts.discount * nv - tr.value_est;
        gae = delta + (tr.done ? 0.0 : opts.discount * opts.gae_lambda * gae);
        tr.advantage = gae;
        tr.target = gae + tr.value_est;
        next_value = tr.value_est;
      }
      break;
    }
  }
  return traj;
}

struct EpisodeReturn {
  double value = 0.0;
  /// False for the trailing episode cut off by the end of the window.
  bool complete = false;
};

/// Discounted return of every episode segment in the window, in order.
inline std::vector<EpisodeReturn> episode_returns(const Trajectory& traj, double discount) {
  std::vector<EpisodeReturn> out;
  double ret = 0.0, weight = 1.0;
  bool open = false;
  for (const auto& tr : traj.transitions) {
    ret += weight * tr.reward;
    weight *= discount;
    open = true;
    if (tr.done) {
      out.push_back({ret, true});
      ret = 0.0;
      weight = 1.0;
      open = false;
    }
  }
  if (open) out.push_back({ret, false});
  return out;
}

/// Writes one JSON object per transition:
///   {"t", "level", "state", "action", "reward", "target", "value",
///    "advantage", "log_prob", "done", "adversarial"}
inline void write_jsonl(const Trajectory& traj, std::ostream& os) {
  for (std::size_t t = 0; t < traj.size(); ++t) {
    const auto& tr = traj[t];
    nlohmann::json j = {{"t", t},
                        {"level", traj.level.to_string()},
                        {"state", tr.state},
                        {"action", tr.action},
                        {"reward", tr.reward},
                        {"target", tr.target},
                        {"value", tr.value_est},
                        {"advantage", tr.advantage},
                        {"log_prob", tr.log_prob_behavior},
                        {"done", tr.done},
                        {"adversarial", tr.adversarial}};
    os << j.dump() << '\n';
  }
}

}  // namespace paada
