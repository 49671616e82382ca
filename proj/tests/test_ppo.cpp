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

#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "checks.hpp"
#include "oracles.hpp"
#include "paada/paada.hpp"

using namespace paada;
using Catch::Approx;
using oracle::Vec;

namespace {

Transition tr(Vec state, int action, double advantage, double logp, double target = 0.0) {
  Transition t;
  t.state = std::move(state);
  t.action = action;
  t.advantage = advantage;
  t.log_prob_behavior = logp;
  t.target = target;
  t.reward = target;
  return t;
}

std::vector<const Transition*> ptrs(const std::vector<Transition>& v) {
  std::vector<const Transition*> out;
  for (const auto& t : v) out.push_back(&t);
  return out;
}

std::vector<Transition> random_batch(const MlpParams& policy, Rng& rng, std::size_t n, double logp_jitter) {
  std::vector<Transition> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto s = checks::detail::random_vec(rng, policy.input_dim());
    const int a = static_cast<int>(rng() % policy.output_dim());
    const double lp = oracle::ref_log_prob(policy, s, a) + rng.uniform(-logp_jitter, logp_jitter);
    out.push_back(tr(std::move(s), a, rng.uniform(-2.0, 2.0), lp));
  }
  return out;
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.net.hidden = {16};
  cfg.rollout.length = 32;
  cfg.ppo.pretrain_epochs = 2;
  cfg.ppo.update_epochs = 1;
  cfg.ppo.minibatch = 16;
  cfg.adv.max_steps = 3;
  return cfg;
}

std::vector<LevelSpec> levels(Family f, int n) {
  std::vector<LevelSpec> out;
  for (int i = 0; i < n; ++i) out.push_back({f, static_cast<std::uint64_t>(i)});
  return out;
}

}  // namespace

TEST_CASE("policy-gradient objective", "[ppo]") {
  const MlpParams uniform({3, 4}, Activation::tanh, Head::softmax);
  const std::vector<Transition> zero{tr({1.0, 2.0, 3.0}, 0, 0.0, 0.0), tr({0.0, 0.0, 0.0}, 3, 0.0, 0.0)};
  CHECK(pg_objective(uniform, zero) == 0.0);
  const std::vector<Transition> one{tr({1.0, 2.0, 3.0}, 2, 2.0, 0.0)};
  CHECK(pg_objective(uniform, one) == Approx(-2.772589).epsilon(1e-6));

  Rng rng(1);
  const auto p = checks::detail::random_net(rng, {4, 12, 3}, Activation::tanh, Head::softmax);
  const auto batch = random_batch(p, rng, 25, 0.0);
  double ref = 0.0;
  for (const auto& t : batch) ref += oracle::ref_log_prob(p, t.state, t.action) * t.advantage / 25.0;
  CHECK(std::fabs(pg_objective(p, batch) - ref) <= 1e-12);
  CHECK_THROWS_AS(pg_objective(p, std::vector<Transition>{}), PreconditionError);
}

TEST_CASE("clip arithmetic", "[ppo]") {
  const MlpParams uniform({1, 2}, Activation::tanh, Head::softmax);
  const double lp = std::log(0.5);
  // rho = 2, A = 1
  CHECK(ppo_clip_objective(uniform, std::vector<Transition>{tr({0.0}, 0, 1.0, lp - std::log(2.0))}, 0.2) ==
        Approx(1.2).epsilon(1e-12));
  // rho = 0.5, A = -1
  CHECK(ppo_clip_objective(uniform, std::vector<Transition>{tr({0.0}, 0, -1.0, lp + std::log(2.0))}, 0.2) ==
        Approx(-0.8).epsilon(1e-12));
  CHECK_THROWS_AS(ppo_clip_objective(uniform, std::vector<Transition>{}, 0.2), PreconditionError);
}

TEST_CASE("ratio-one identity", "[ppo]") {
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    const auto p = checks::detail::random_net(rng, {5, 10, 4}, Activation::tanh, Head::softmax);
    std::vector<Transition> batch;
    double mean_adv = 0.0;
    for (int k = 0; k < 30; ++k) {
      auto s = checks::detail::random_vec(rng, 5);
      const int a = static_cast<int>(rng() % 4);
      const double lp = floored_log(policy_forward(p, s)[a]);
      batch.push_back(tr(std::move(s), a, rng.uniform(-3.0, 3.0), lp));
      mean_adv += batch.back().advantage / 30.0;
    }
    CHECK(std::fabs(ppo_clip_objective(p, batch, 0.2) - mean_adv) <= 1e-9);
  }
}

TEST_CASE("clip bound and pessimism", "[ppo]") {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto p = checks::detail::random_net(rng, {4, 8, 3}, Activation::tanh, Head::softmax);
    const auto batch = random_batch(p, rng, 20, 1.0);
    double bound = 0.0, unclipped = 0.0;
    for (const auto& t : batch) {
      const double rho = std::exp(oracle::ref_log_prob(p, t.state, t.action) - t.log_prob_behavior);
      bound += std::max(rho * t.advantage, 1.2 * t.advantage) / 20.0;
      unclipped += rho * t.advantage / 20.0;
    }
    const double obj = ppo_clip_objective(p, batch, 0.2);
    CHECK(obj <= bound + 1e-12);
    CHECK(obj <= unclipped + 1e-12);
    CHECK(obj == Approx(oracle::ref_ppo_objective(p, batch, 0.2, 0.0)).epsilon(1e-12));
  }
}

TEST_CASE("policy update fixed points", "[ppo]") {
  Rng rng(4);
  const auto p = checks::detail::random_net(rng, {4, 8, 3}, Activation::tanh, Head::softmax);
  auto batch = random_batch(p, rng, 32, 0.0);
  for (auto& t : batch) t.advantage = 0.0;
  PpoConfig cfg;
  cfg.entropy_coef = 0.0;
  Adam opt(p.size(), cfg.policy_lr);
  Rng urng(1);
  CHECK(update_policy(p, ptrs(batch), cfg, opt, urng) == p);

  batch = random_batch(p, rng, 32, 0.3);
  cfg.entropy_coef = 0.01;
  cfg.policy_lr = 0.0;
  Adam zero(p.size(), 0.0);
  CHECK(update_policy(p, ptrs(batch), cfg, zero, urng) == p);
  CHECK_THROWS_AS(update_policy(p, {}, cfg, zero, urng), PreconditionError);
}

TEST_CASE("positive advantage raises the action probability", "[ppo]") {
  Rng rng(5);
  for (int i = 0; i < 10; ++i) {
    const auto p = checks::detail::random_net(rng, {3, 8, 4}, Activation::tanh, Head::softmax);
    const Vec s = checks::detail::random_vec(rng, 3);
    const int a = i % 4;
    const std::vector<Transition> batch{tr(s, a, 1.0, floored_log(policy_forward(p, s)[a]))};
    PpoConfig cfg;
    cfg.update_epochs = 1;
    cfg.entropy_coef = 0.0;
    Adam opt(p.size(), cfg.policy_lr);
    Rng urng(2);
    const auto q = update_policy(p, ptrs(batch), cfg, opt, urng);
    CHECK(oracle::ref_probs(q, s)[a] > oracle::ref_probs(p, s)[a]);
  }
}

TEST_CASE("value update", "[ppo]") {
  Rng rng(6);
  const auto v = checks::detail::random_net(rng, {3, 8, 1}, Activation::tanh, Head::identity);
  PpoConfig cfg;
  cfg.update_epochs = 1;

  std::vector<Transition> exact;
  for (int i = 0; i < 10; ++i) {
    auto s = checks::detail::random_vec(rng, 3);
    const double target = value_forward(v, s);
    exact.push_back(tr(std::move(s), 0, 0.0, 0.0, target));
  }
  Adam opt(v.size(), cfg.value_lr);
  Rng urng(3);
  CHECK(update_value(v, ptrs(exact), cfg, opt, urng) == v);

  const Vec s = checks::detail::random_vec(rng, 3);
  const double before = value_forward(v, s);
  const double target = before + 1.5;
  const std::vector<Transition> constant{tr(s, 0, 0.0, 0.0, target)};
  Adam opt2(v.size(), cfg.value_lr);
  const double after = value_forward(update_value(v, ptrs(constant), cfg, opt2, urng), s);
  CHECK(after > before);
  CHECK(after < target);

  Adam zero(v.size(), 0.0);
  CHECK(update_value(v, ptrs(constant), cfg, zero, urng) == v);
}

TEST_CASE("update rejects non-finite gradients", "[ppo]") {
  MlpParams p({1, 2}, Activation::tanh, Head::softmax);
  const std::vector<Transition> batch{tr({0.0}, 0, INFINITY, 0.0)};
  PpoConfig cfg;
  Adam opt(p.size(), cfg.policy_lr);
  Rng rng(1);
  CHECK_THROWS_AS(update_policy(p, ptrs(batch), cfg, opt, rng), NumericError);
}

TEST_CASE("default hyperparameters", "[ppo]") {
  const PpoConfig cfg;
  CHECK(cfg.clip_eps == 0.2);
  CHECK(cfg.pretrain_epochs == 50);
  CHECK(cfg.discount == 0.999);
  CHECK(cfg.nu == 0.5);
  CHECK(RolloutConfig{}.length == 256);
}

TEST_CASE("training is reproducible", "[train]") {
  auto cfg = small_config();
  cfg.ppo.mode = Mode::paada_mixup;
  cfg.ppo.epochs = 4;
  const auto a = train(cfg, levels(Family::grid_goal, 3), 7);
  const auto b = train(cfg, levels(Family::grid_goal, 3), 7);
  CHECK(a.policy == b.policy);
  CHECK(a.value == b.value);
  CHECK(a.history.size() == 4);
  const auto c = train(cfg, levels(Family::grid_goal, 3), 8);
  CHECK_FALSE(c.policy == a.policy);
}

TEST_CASE("pre-training gate", "[train]") {
  auto cfg = small_config();
  cfg.ppo.epochs = 4;
  cfg.ppo.pretrain_epochs = 3;
  const auto ppo = train(cfg, levels(Family::line_world, 2), 1);
  for (Mode m : {Mode::paada, Mode::paada_mixup, Mode::mixreg}) {
    auto c = cfg;
    c.ppo.mode = m;
    std::vector<MlpParams> policies;
    const auto res = train(c, levels(Family::line_world, 2), 1,
                           [&](const EpochStats&, const Trainer& t) { policies.push_back(t.policy()); });
    std::vector<MlpParams> ppo_policies;
    train(cfg, levels(Family::line_world, 2), 1,
          [&](const EpochStats&, const Trainer& t) { ppo_policies.push_back(t.policy()); });
    CHECK_FALSE(res.history[0].augmented);
    CHECK_FALSE(res.history[1].augmented);
    CHECK(res.history[2].augmented);
    CHECK(policies[0] == ppo_policies[0]);
    CHECK(policies[1] == ppo_policies[1]);
    CHECK_FALSE(policies[3] == ppo_policies[3]);
  }
  CHECK(ppo.history.size() == 4);
}

TEST_CASE("ppo mode ignores augmentation settings", "[train]") {
  auto cfg = small_config();
  cfg.ppo.epochs = 4;
  const auto a = train(cfg, levels(Family::line_world, 2), 2);
  cfg.adv.stepsize = 0.5;
  cfg.adv.max_steps = 7;
  cfg.ppo.nu = 0.9;
  cfg.mixup.beta = 3.0;
  const auto b = train(cfg, levels(Family::line_world, 2), 2);
  CHECK(a.policy == b.policy);
  CHECK(a.value == b.value);
}

TEST_CASE("nu = 0 reproduces ppo", "[train]") {
  auto cfg = small_config();
  cfg.ppo.epochs = 5;
  const auto ppo = train(cfg, levels(Family::grid_goal, 2), 3);
  cfg.ppo.mode = Mode::paada;
  cfg.ppo.nu = 0.0;
  const auto paada = train(cfg, levels(Family::grid_goal, 2), 3);
  CHECK(paada.policy == ppo.policy);
  CHECK(paada.value == ppo.value);
  for (std::size_t e = 0; e < ppo.history.size(); ++e)
    CHECK(checks::same_bits(paada.history[e].train_return, ppo.history[e].train_return));
}

TEST_CASE("trainer preconditions", "[train]") {
  auto cfg = small_config();
  CHECK_THROWS_AS(Trainer(cfg, {}, 0), PreconditionError);
  CHECK_THROWS_AS(Trainer(cfg, {{Family::line_world, 0}, {Family::grid_goal, 0}}, 0), ConfigError);
  cfg.ppo.clip_eps = 1.5;
  CHECK_THROWS_AS(Trainer(cfg, levels(Family::line_world, 1), 0), ConfigError);
}

TEST_CASE("mode names", "[train]") {
  for (Mode m : kAllModes) CHECK(parse_mode(mode_name(m)) == m);
  CHECK(mode_name(Mode::paada_mixup) == "paada+mixup");
  CHECK_THROWS_AS(parse_mode("dqn"), ConfigError);
}
