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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "paada/augment.hpp"
#include "paada/env.hpp"
#include "paada/mlp.hpp"
#include "paada/objectives.hpp"
#include "paada/parallel.hpp"
#include "paada/random.hpp"
#include "paada/rollout.hpp"

namespace paada {

enum class Mode { ppo, paada, paada_mixup, mixreg };

inline constexpr std::array<Mode, 4> kAllModes = {Mode::ppo, Mode::paada, Mode::paada_mixup, Mode::mixreg};

inline std::string_view mode_name(Mode m) {
  switch (m) {
    case Mode::ppo: return "ppo";
    case Mode::paada: return "paada";
    case Mode::paada_mixup: return "paada+mixup";
    case Mode::mixreg: return "mixreg";
  }
  return "?";
}

inline Mode parse_mode(std::string_view s) {
  if (s == "ppo") return Mode::ppo;
  if (s == "paada") return Mode::paada;
  if (s == "paada+mixup") return Mode::paada_mixup;
  if (s == "mixreg" || s == "mixreg-baseline") return Mode::mixreg;
  throw ConfigError("unknown training mode '" + std::string(s) + "'");
}

inline bool uses_adversarial(Mode m) { return m == Mode::paada || m == Mode::paada_mixup; }
inline bool uses_mixup(Mode m) { return m == Mode::paada_mixup || m == Mode::mixreg; }

struct PpoConfig {
  double clip_eps = 0.2;
  double policy_lr = 5e-4;
  double value_lr = 5e-4;
  int update_epochs = 3;
  std::size_t minibatch = 64;
  double entropy_coef = 0.01;
  int pretrain_epochs = 50;
  double discount = 0.999;
  int epochs = 600;
  Mode mode = Mode::ppo;
  double nu = 0.5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const {
    if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw ConfigError("ppo.clip_eps must lie in (0, 1)");
    if (!(policy_lr >= 0.0) || !(value_lr >= 0.0)) throw ConfigError("learning rates must be non-negative");
    if (update_epochs < 1) throw ConfigError("ppo.update_epochs must be positive");
    if (minibatch == 0) throw ConfigError("ppo.minibatch must be positive");
    if (!(entropy_coef >= 0.0)) throw ConfigError("ppo.entropy_coef must be non-negative");
    if (pretrain_epochs < 0) throw ConfigError("ppo.pretrain_epochs must be non-negative");
    if (!(discount > 0.0 && discount <= 1.0)) throw ConfigError("ppo.discount must lie in (0, 1]");
    if (epochs < 1) throw ConfigError("ppo.epochs must be positive");
    if (!(nu >= 0.0 && nu <= 1.0)) throw ConfigError("ppo.nu must lie in [0, 1]");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) || !(adam_eps > 0.0))
      throw ConfigError("invalid Adam hyperparameters");
  }
};

struct RolloutConfig {
  std::size_t length = 256;
  std::size_t max_trajectories = 64;
  AdvantageEstimator estimator = AdvantageEstimator::discounted_return;
  double gae_lambda = 0.95;

  void validate() const {
    if (length == 0) throw ConfigError("rollout.length must be positive");
    if (max_trajectories == 0) throw ConfigError("rollout.max_trajectories must be positive");
    if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigError("rollout.gae_lambda must lie in [0, 1]");
  }
};

struct NetConfig {
  std::vector<std::size_t> hidden = {64, 64};
  Activation activation = Activation::tanh;

  void validate() const {
    for (auto h : hidden)
      if (h == 0) throw ConfigError("net.hidden widths must be positive");
  }
};

struct TrainConfig {
  PpoConfig ppo;
  AdvGenConfig adv;
  MixupConfig mixup;
  RolloutConfig rollout;
  NetConfig net;

  void validate() const {
    ppo.validate();
    adv.validate();
    mixup.validate();
    rollout.validate();
    net.validate();
  }
};

/// Empirical mean of log pi(a_t|s_t) A_t.
inline double pg_objective(const MlpParams& policy, std::span<const Transition> batch) {
  if (batch.empty()) throw PreconditionError("pg_objective on an empty batch");
  const Matrix probs = policy_forward_batch(policy, stack_states(batch));
  double total = 0.0;
  for (std::size_t c = 0; c < batch.size(); ++c)
    total += floored_log(probs(static_cast<std::size_t>(batch[c].action), c)) * batch[c].advantage;
  return total / static_cast<double>(batch.size());
}

/// Empirical mean of min(rho A, clip(rho, 1 - eps, 1 + eps) A).
inline double ppo_clip_objective(const MlpParams& policy, std::span<const Transition> batch, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw PreconditionError("clip epsilon must lie in (0, 1)");
  return grad_params(PpoClipLoss{eps, 0.0}, policy, batch).objective;
}

/// Adam with bias correction. `ascend` flips the step direction.
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t size, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(size, 0.0), v_(size, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad, bool ascend) {
    if (params.size() != m_.size() || grad.size() != m_.size()) throw ShapeError("optimizer state size mismatch");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const double sign = ascend ? 1.0 : -1.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
      const double mhat = m_[i] / c1;
      const double vhat = v_[i] / c2;
      params[i] += sign * lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }

  std::size_t steps() const noexcept { return t_; }

 private:
  double lr_ = 0.0, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

namespace detail {

template <typename Loss>
MlpParams minibatch_updates(MlpParams params, std::span<const Transition* const> data, const PpoConfig& cfg,
                            Adam& opt, Rng& rng, const Loss& loss, bool ascend, std::string_view what) {
  if (data.empty()) throw PreconditionError(std::string(what) + " update on an empty dataset");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<const Transition*> mb;
  for (int e = 0; e < cfg.update_epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t lo = 0, b = 0; lo < order.size(); lo += cfg.minibatch, ++b) {
      const std::size_t hi = std::min(order.size(), lo + cfg.minibatch);
      mb.clear();
      for (std::size_t i = lo; i < hi; ++i) mb.push_back(data[order[i]]);
      const ParamGradResult g = grad_params(loss, params, std::span<const Transition* const>(mb));
      if (!g.gradient.all_finite() || !std::isfinite(g.objective))
        throw NumericError(std::string(what) + " update: non-finite gradient in update epoch " + std::to_string(e) +
                           ", minibatch " + std::to_string(b) + " (objective " + std::to_string(g.objective) + ")");
      opt.step(params.flat(), g.gradient.flat(), ascend);
    }
  }
  return params;
}

}  // namespace detail

/// Ascends the clipped surrogate plus entropy bonus over shuffled minibatches
/// for cfg.update_epochs passes.
inline MlpParams update_policy(MlpParams policy, std::span<const Transition* const> data, const PpoConfig& cfg,
                               Adam& opt, Rng& rng) {
  return detail::minibatch_updates(std::move(policy), data, cfg, opt, rng, PpoClipLoss{cfg.clip_eps, cfg.entropy_coef},
                                   true, "policy");
}

/// Descends the squared error between V(s_t) and target_t.
inline MlpParams update_value(MlpParams value, std::span<const Transition* const> data, const PpoConfig& cfg,
                              Adam& opt, Rng& rng) {
  return detail::minibatch_updates(std::move(value), data, cfg, opt, rng, ValueRegressionLoss{}, false, "value");
}

struct EpochStats {
  int epoch = 0;
  /// Mean undiscounted return of the episodes completed inside the collected
  /// windows (before augmentation); NaN when none completed.
  double train_return = std::numeric_limits<double>::quiet_NaN();
  std::size_t completed_episodes = 0;
  bool augmented = false;
  AdvStats adv;
};

/// Owns one policy/value pair and advances it one training epoch at a time.
///
/// Every random decision draws from a stream keyed by (seed, purpose, epoch,
/// trajectory index), so augmentation choices never shift the randomness of
/// collection or updates.
class Trainer {
 public:
  Trainer(TrainConfig cfg, std::vector<LevelSpec> levels, std::uint64_t seed)
      : cfg_(std::move(cfg)), levels_(std::move(levels)), seed_(seed) {
    cfg_.validate();
    if (levels_.empty()) throw PreconditionError("training needs at least one level");
    family_ = levels_.front().family;
    for (const auto& l : levels_)
      if (l.family != family_) throw ConfigError("a trainer's levels must share one family");
    bounds_ = observation_bounds(family_);
    std::vector<std::size_t> pdims{observation_dim(family_)}, vdims{observation_dim(family_)};
    for (auto h : cfg_.net.hidden) {
      pdims.push_back(h);
      vdims.push_back(h);
    }
    pdims.push_back(num_actions(family_));
    vdims.push_back(1);
    policy_ = MlpParams::glorot(pdims, cfg_.net.activation, Head::softmax, derive_seed(seed_, "init-policy"));
    value_ = MlpParams::glorot(vdims, cfg_.net.activation, Head::identity, derive_seed(seed_, "init-value"));
    policy_opt_ = Adam(policy_.size(), cfg_.ppo.policy_lr, cfg_.ppo.adam_beta1, cfg_.ppo.adam_beta2, cfg_.ppo.adam_eps);
    value_opt_ = Adam(value_.size(), cfg_.ppo.value_lr, cfg_.ppo.adam_beta1, cfg_.ppo.adam_beta2, cfg_.ppo.adam_eps);
    envs_.reserve(levels_.size());
    for (const auto& l : levels_) envs_.emplace_back(l);
  }

  /// Trajectories per epoch: one per training level, capped.
  std::size_t trajectories_per_epoch() const { return std::min(levels_.size(), cfg_.rollout.max_trajectories); }

  EpochStats run_epoch() {
    const int k = ++epoch_;
    EpochStats stats;
    stats.epoch = k;

    const std::size_t n = trajectories_per_epoch();
    std::vector<Trajectory> trajs(n);
    const AdvantageOptions adv_opts{cfg_.rollout.estimator, cfg_.ppo.discount, cfg_.rollout.gae_lambda};
    const std::size_t base = (static_cast<std::size_t>(k - 1) * n) % levels_.size();
    parallel_for(n, [&](std::size_t i) {
      Environment& env = envs_[(base + i) % levels_.size()];
      Rng rng(derive_seed(seed_, "collect", static_cast<std::uint64_t>(k), i));
      trajs[i] = compute_advantages(collect_trajectory(policy_, value_, env, cfg_.rollout.length, rng), value_,
                                    adv_opts);
    });

    double ret_sum = 0.0;
    for (const auto& tr : trajs)
      for (const auto& ep : episode_returns(tr, 1.0))
        if (ep.complete) {
          ret_sum += ep.value;
          ++stats.completed_episodes;
        }
    if (stats.completed_episodes) stats.train_return = ret_sum / static_cast<double>(stats.completed_episodes);

    const Mode mode = cfg_.ppo.mode;
    if (mode != Mode::ppo && k >= cfg_.ppo.pretrain_epochs) {
      stats.augmented = true;
      for (std::size_t i = 0; i < n; ++i) {
        if (uses_adversarial(mode)) {
          Rng merge_rng(derive_seed(seed_, "merge", static_cast<std::uint64_t>(k), i));
          // generating only the selected positions is equivalent to building
          // the whole adversarial trajectory and merging
          const auto positions = select_merge_positions(trajs[i].size(), cfg_.ppo.nu, merge_rng);
          auto adv = build_adversarial_transitions(trajs[i], positions, policy_, value_, cfg_.adv, &bounds_,
                                                   &stats.adv);
          for (std::size_t j = 0; j < positions.size(); ++j) trajs[i][positions[j]] = std::move(adv[j]);
        }
        if (uses_mixup(mode)) {
          Rng mix_rng(derive_seed(seed_, "mixup", static_cast<std::uint64_t>(k), i));
          trajs[i] = mixup_trajectory(trajs[i], cfg_.mixup, mix_rng, policy_);
        }
      }
    }

    std::vector<const Transition*> data;
    data.reserve(n * cfg_.rollout.length);
    for (const auto& tr : trajs)
      for (const auto& t : tr.transitions) data.push_back(&t);
    Rng prng(derive_seed(seed_, "policy-update", static_cast<std::uint64_t>(k)));
    Rng vrng(derive_seed(seed_, "value-update", static_cast<std::uint64_t>(k)));
    policy_ = update_policy(std::move(policy_), data, cfg_.ppo, policy_opt_, prng);
    value_ = update_value(std::move(value_), data, cfg_.ppo, value_opt_, vrng);
    return stats;
  }

  int epoch() const noexcept { return epoch_; }
  const MlpParams& policy() const noexcept { return policy_; }
  const MlpParams& value() const noexcept { return value_; }
  const TrainConfig& config() const noexcept { return cfg_; }
  Family family() const noexcept { return family_; }
  const std::vector<LevelSpec>& levels() const noexcept { return levels_; }

 private:
  TrainConfig cfg_;
  std::vector<LevelSpec> levels_;
  std::uint64_t seed_;
  Family family_ = Family::line_world;
  ObsBounds bounds_;
  MlpParams policy_, value_;
  Adam policy_opt_, value_opt_;
  std::vector<Environment> envs_;
  int epoch_ = 0;
};

struct TrainResult {
  MlpParams policy;
  MlpParams value;
  std::vector<EpochStats> history;
};

/// Runs cfg.ppo.epochs epochs. `on_epoch` sees the trainer after each epoch.
inline TrainResult train(const TrainConfig& cfg, std::vector<LevelSpec> levels, std::uint64_t seed,
                         const std::function<void(const EpochStats&, const Trainer&)>& on_epoch = {}) {
  Trainer trainer(cfg, std::move(levels), seed);
  TrainResult res;
  res.history.reserve(static_cast<std::size_t>(cfg.ppo.epochs));
  for (int e = 0; e < cfg.ppo.epochs; ++e) {
    res.history.push_back(trainer.run_epoch());
    if (on_epoch) on_epoch(res.history.back(), trainer);
  }
  res.policy = trainer.policy();
  res.value = trainer.value();
  return res;
}

}  // namespace paada
