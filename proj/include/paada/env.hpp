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

// Seeded procedural toy environments. A level is fully determined by its
// (family, seed) pair; everything random about a level (walls, cell palette,
// distractor features) is drawn from its own derived stream of the seed.
//
// LineWorld: 16-cell track, actions {left, right}, start at cell 0, goal at
//   cell 15 (+1), -0.01 per step, horizon 64. Observation: one-hot position
//   followed by the level's distractor vector.
// GridGoal: 8x8 grid, actions {up, down, left, right}, start (0,0), goal
//   (7,7) (+10), -0.1 per step, horizon 100. Every non-start, non-goal cell is
//   a wall with probability 0.2; layouts are resampled until the goal is
//   reachable. Observation: the flattened grid (empty 0, wall/goal/agent use
//   the level's palette values in [0.5, 1.5]) followed by the distractor.
// Both families append an 8-dimensional distractor drawn from [-1, 1]; it
// never affects dynamics or rewards.

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "paada/error.hpp"
#include "paada/random.hpp"

namespace paada {

enum class Family { line_world, grid_goal };

inline constexpr std::array<Family, 2> kAllFamilies = {Family::line_world, Family::grid_goal};

inline std::string_view family_name(Family f) {
  return f == Family::line_world ? "LineWorld" : "GridGoal";
}

inline Family parse_family(std::string_view name) {
  if (name == "LineWorld") return Family::line_world;
  if (name == "GridGoal") return Family::grid_goal;
  throw ConfigError("unknown environment family '" + std::string(name) + "'");
}

/// One level of one family. Serialized as "family:seed".
struct LevelSpec {
  Family family = Family::line_world;
  std::uint64_t seed = 0;

  std::string to_string() const { return std::string(family_name(family)) + ":" + std::to_string(seed); }

  static LevelSpec parse(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) throw ConfigError("level spec '" + std::string(text) + "' lacks ':'");
    LevelSpec spec;
    spec.family = parse_family(text.substr(0, colon));
    const std::string digits(text.substr(colon + 1));
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
      throw ConfigError("level spec '" + std::string(text) + "' has a malformed seed");
    spec.seed = std::stoull(digits);
    return spec;
  }

  friend auto operator<=>(const LevelSpec&, const LevelSpec&) = default;
};

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool done = false;
};

/// Per-coordinate box containing every observation of a family.
struct ObsBounds {
  std::vector<double> lower;
  std::vector<double> upper;
};

namespace line_world {
inline constexpr int kTrackLength = 16;
inline constexpr int kHorizon = 64;
inline constexpr double kStepCost = 0.01;
inline constexpr double kGoalReward = 1.0;
}  // namespace line_world

namespace grid_goal {
inline constexpr int kSize = 8;
inline constexpr int kCells = kSize * kSize;
inline constexpr int kHorizon = 100;
inline constexpr double kStepCost = 0.1;
inline constexpr double kGoalReward = 10.0;
inline constexpr double kWallProbability = 0.2;
inline constexpr double kPaletteLow = 0.5;
inline constexpr double kPaletteHigh = 1.5;
inline constexpr int kGoalCell = kCells - 1;

using Walls = std::array<bool, kCells>;

/// Action encoding: 0 up, 1 down, 2 left, 3 right.
inline constexpr std::array<int, 4> kRowDelta = {-1, 1, 0, 0};
inline constexpr std::array<int, 4> kColDelta = {0, 0, -1, 1};

/// Length of the shortest start-to-goal path, or nullopt if unreachable.
inline std::optional<int> shortest_path_length(const Walls& walls) {
  std::array<int, kCells> dist;
  dist.fill(-1);
  std::deque<int> frontier{0};
  dist[0] = 0;
  while (!frontier.empty()) {
    const int cell = frontier.front();
    frontier.pop_front();
    if (cell == kGoalCell) return dist[cell];
    const int r = cell / kSize, c = cell % kSize;
    for (int a = 0; a < 4; ++a) {
      const int nr = r + kRowDelta[a], nc = c + kColDelta[a];
      if (nr < 0 || nr >= kSize || nc < 0 || nc >= kSize) continue;
      const int next = nr * kSize + nc;
      if (walls[next] || dist[next] >= 0) continue;
      dist[next] = dist[cell] + 1;
      frontier.push_back(next);
    }
  }
  return std::nullopt;
}

/// Wall layout of a level: Bernoulli(0.2) per non-start, non-goal cell,
/// redrawn (from the next attempt's stream) until the goal is reachable.
inline Walls generate_walls(std::uint64_t level_seed) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(derive_seed(level_seed, "grid-walls", attempt));
    Walls walls{};
    for (int cell = 1; cell < kGoalCell; ++cell) walls[cell] = rng.uniform() < kWallProbability;
    if (shortest_path_length(walls)) return walls;
  }
}
}  // namespace grid_goal

inline constexpr std::size_t kDistractorDim = 8;

inline std::size_t observation_dim(Family f) {
  return (f == Family::line_world ? line_world::kTrackLength : grid_goal::kCells) + kDistractorDim;
}

inline std::size_t num_actions(Family f) { return f == Family::line_world ? 2 : 4; }

inline int horizon(Family f) { return f == Family::line_world ? line_world::kHorizon : grid_goal::kHorizon; }

inline ObsBounds observation_bounds(Family f) {
  const std::size_t core = observation_dim(f) - kDistractorDim;
  const double hi = f == Family::line_world ? 1.0 : grid_goal::kPaletteHigh;
  ObsBounds b;
  b.lower.assign(core, 0.0);
  b.upper.assign(core, hi);
  b.lower.resize(core + kDistractorDim, -1.0);
  b.upper.resize(core + kDistractorDim, 1.0);
  return b;
}

/// Extremes of the per-episode undiscounted return.
inline std::pair<double, double> return_range(Family f) {
  if (f == Family::line_world)
    return {-line_world::kStepCost * line_world::kHorizon,
            line_world::kGoalReward - line_world::kStepCost * (line_world::kTrackLength - 1)};
  return {-grid_goal::kStepCost * grid_goal::kHorizon, grid_goal::kGoalReward};
}

/// Single-threaded handle on one level.
class Environment {
 public:
  explicit Environment(LevelSpec spec) : spec_(spec) {
    Rng distractor_rng(derive_seed(spec.seed, "distractor"));
    distractor_.resize(kDistractorDim);
    for (double& d : distractor_) d = distractor_rng.uniform(-1.0, 1.0);
    if (spec.family == Family::grid_goal) {
      walls_ = grid_goal::generate_walls(spec.seed);
      Rng palette_rng(derive_seed(spec.seed, "palette"));
      for (double& v : palette_) v = palette_rng.uniform(grid_goal::kPaletteLow, grid_goal::kPaletteHigh);
    }
    reset();
  }

  /// GridGoal level with a caller-chosen wall layout; palette and distractor
  /// still come from the seed.
  Environment(LevelSpec spec, const grid_goal::Walls& walls) : Environment(spec) {
    if (spec.family != Family::grid_goal) throw ConfigError("explicit walls require a GridGoal level");
    if (walls[0] || walls[grid_goal::kGoalCell] || !grid_goal::shortest_path_length(walls))
      throw PreconditionError("wall layout must keep the goal reachable from the start");
    walls_ = walls;
    reset();
  }

  const LevelSpec& spec() const noexcept { return spec_; }
  Family family() const noexcept { return spec_.family; }
  std::size_t observation_dim() const { return paada::observation_dim(spec_.family); }
  std::size_t num_actions() const { return paada::num_actions(spec_.family); }
  int horizon() const { return paada::horizon(spec_.family); }

  std::vector<double> reset() {
    position_ = 0;
    steps_ = 0;
    done_ = false;
    return observation();
  }

  StepResult step(int action) {
    if (done_) throw PreconditionError("step called on a finished episode of " + spec_.to_string());
    if (action < 0 || static_cast<std::size_t>(action) >= num_actions())
      throw PreconditionError("action " + std::to_string(action) + " outside the action set of " +
                              spec_.to_string());
    ++steps_;
    StepResult res;
    bool at_goal = false;
    if (spec_.family == Family::line_world) {
      position_ = action == 1 ? std::min(position_ + 1, line_world::kTrackLength - 1) : std::max(position_ - 1, 0);
      at_goal = position_ == line_world::kTrackLength - 1;
      res.reward = -line_world::kStepCost + (at_goal ? line_world::kGoalReward : 0.0);
    } else {
      const int r = position_ / grid_goal::kSize + grid_goal::kRowDelta[action];
      const int c = position_ % grid_goal::kSize + grid_goal::kColDelta[action];
      if (r >= 0 && r < grid_goal::kSize && c >= 0 && c < grid_goal::kSize && !walls_[r * grid_goal::kSize + c])
        position_ = r * grid_goal::kSize + c;
      at_goal = position_ == grid_goal::kGoalCell;
      res.reward = -grid_goal::kStepCost + (at_goal ? grid_goal::kGoalReward : 0.0);
    }
    done_ = at_goal || steps_ >= horizon();
    res.done = done_;
    res.observation = observation();
    return res;
  }

  std::vector<double> observation() const {
    std::vector<double> obs(observation_dim(), 0.0);
    if (spec_.family == Family::line_world) {
      obs[position_] = 1.0;
    } else {
      for (int cell = 0; cell < grid_goal::kCells; ++cell)
        if (walls_[cell]) obs[cell] = palette_[0];
      obs[grid_goal::kGoalCell] = palette_[1];
      obs[position_] = palette_[2];
    }
    std::copy(distractor_.begin(), distractor_.end(), obs.end() - kDistractorDim);
    return obs;
  }

  bool done() const noexcept { return done_; }
  int steps() const noexcept { return steps_; }
  /// Cell index (LineWorld) or row * 8 + col (GridGoal).
  int position() const noexcept { return position_; }
  const std::vector<double>& distractor() const noexcept { return distractor_; }
  const grid_goal::Walls& walls() const noexcept { return walls_; }
  /// (wall, goal, agent) cell values; all zero for LineWorld.
  const std::array<double, 3>& palette() const noexcept { return palette_; }

 private:
  LevelSpec spec_;
  std::vector<double> distractor_;
  grid_goal::Walls walls_{};
  std::array<double, 3> palette_{};
  int position_ = 0;
  int steps_ = 0;
  bool done_ = false;
};

inline Environment make_env(LevelSpec spec) { return Environment(spec); }

/// Optimal undiscounted return of a level (shortest path under the family's
/// reward rule). Ignores the distractor by construction.
inline double oracle_return(const LevelSpec& spec) {
  if (spec.family == Family::line_world)
    return line_world::kGoalReward - line_world::kStepCost * (line_world::kTrackLength - 1);
  const auto len = grid_goal::shortest_path_length(grid_goal::generate_walls(spec.seed));
  return grid_goal::kGoalReward - grid_goal::kStepCost * *len;
}

/// Optimal undiscounted return of a GridGoal layout.
inline double oracle_return(const grid_goal::Walls& walls) {
  const auto len = grid_goal::shortest_path_length(walls);
  if (!len) throw PreconditionError("goal unreachable");
  return grid_goal::kGoalReward - grid_goal::kStepCost * *len;
}

struct LevelSplit {
  std::vector<LevelSpec> train;
  std::vector<LevelSpec> test;
};

/// Test set: levels with seeds 0..m-1. Train set: ceil(xi * m) of them drawn
/// uniformly without replacement from a stream keyed by split_seed.
inline LevelSplit sample_levels(Family family, std::size_t m, double xi, std::uint64_t split_seed) {
  if (m == 0) throw ConfigError("number of levels m must be positive");
  if (!(xi > 0.0 && xi <= 1.0)) throw ConfigError("xi must lie in (0, 1], got " + std::to_string(xi));
  LevelSplit split;
  split.test.reserve(m);
  for (std::size_t i = 0; i < m; ++i) split.test.push_back({family, i});
  const auto n = static_cast<std::size_t>(std::ceil(xi * static_cast<double>(m) - 1e-9));
  std::vector<LevelSpec> pool = split.test;
  Rng rng(derive_seed(split_seed, "level-split", family_name(family)));
  // partial Fisher-Yates
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform() * static_cast<double>(m - i));
    std::swap(pool[i], pool[std::min(j, m - 1)]);
  }
  split.train.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));
  return split;
}

}  // namespace paada
