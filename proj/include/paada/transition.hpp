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
#include <span>
#include <vector>

#include "paada/env.hpp"
#include "paada/mlp.hpp"

namespace paada {

/// One timestep as consumed by the objectives.
///
/// `target` is the quantity the advantage is measured against: the raw
/// reward under the immediate estimator (advantage = reward - V(state)), the
/// discounted return-to-go or the lambda-return otherwise. It doubles as the
/// value-regression target.
struct Transition {
  std::vector<double> state;
  int action = 0;
  double reward = 0.0;
  double target = 0.0;
  double value_est = 0.0;
  double advantage = 0.0;
  double log_prob_behavior = 0.0;
  bool done = false;
  bool adversarial = false;

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Fixed-length window of transitions from one level. Episodes that end
/// inside the window are followed by a fresh episode on the same level.
struct Trajectory {
  std::vector<Transition> transitions;
  LevelSpec level;
  /// Observation following the last transition (start of the next window).
  std::vector<double> next_state;

  std::size_t size() const noexcept { return transitions.size(); }
  bool empty() const noexcept { return transitions.empty(); }
  Transition& operator[](std::size_t i) { return transitions[i]; }
  const Transition& operator[](std::size_t i) const { return transitions[i]; }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// States of a batch of transitions as a feature-major matrix.
inline Matrix stack_states(std::span<const Transition> batch) {
  if (batch.empty()) return {};
  const std::size_t dim = batch.front().state.size();
  Matrix m(dim, batch.size());
  for (std::size_t c = 0; c < batch.size(); ++c) {
    if (batch[c].state.size() != dim) throw ShapeError("transitions in one batch have different state sizes");
    m.set_col(c, batch[c].state);
  }
  return m;
}

inline Matrix stack_states(std::span<const Transition* const> batch) {
  if (batch.empty()) return {};
  const std::size_t dim = batch.front()->state.size();
  Matrix m(dim, batch.size());
  for (std::size_t c = 0; c < batch.size(); ++c) {
    if (batch[c]->state.size() != dim) throw ShapeError("transitions in one batch have different state sizes");
    m.set_col(c, batch[c]->state);
  }
  return m;
}

}  // namespace paada
