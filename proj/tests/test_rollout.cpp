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

#include <sstream>
#include <vector>

#include <json.hpp>

#include "checks.hpp"
#include "oracles.hpp"
#include "paada/paada.hpp"

using namespace paada;
using Catch::Approx;

namespace {

/// Policy whose output layer makes "right" overwhelmingly likely.
MlpParams always_right(Family f) {
  MlpParams p({observation_dim(f), num_actions(f)}, Activation::tanh, Head::softmax);
  p.bias(0)[num_actions(f) - 1] = 60.0;
  return p;
}

Trajectory with_rewards(std::vector<double> rewards, std::vector<bool> dones) {
  Trajectory t;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    Transition tr;
    tr.state = {0.0};
    tr.reward = rewards[i];
    tr.done = dones[i];
    t.transitions.push_back(tr);
  }
  t.next_state = {0.0};
  return t;
}

}  // namespace

TEST_CASE("collected trajectories have the requested length", "[rollout]") {
  Rng init(1);
  const auto policy = checks::detail::random_net(init, {24, 16, 2}, Activation::tanh, Head::softmax);
  const auto value = checks::detail::random_net(init, {24, 16, 1}, Activation::tanh, Head::identity);
  for (std::size_t len : {1u, 37u, 256u}) {
    Environment env({Family::line_world, 2});
    Rng rng(5);
    CHECK(collect_trajectory(policy, value, env, len, rng).size() == len);
  }
  Environment env({Family::line_world, 2});
  Rng rng(5);
  CHECK_THROWS_AS(collect_trajectory(policy, value, env, 0, rng), PreconditionError);
}

TEST_CASE("deterministic policy reproduces the hand simulation", "[rollout]") {
  const auto policy = always_right(Family::line_world);
  const MlpParams value({24, 1}, Activation::tanh, Head::identity);
  Environment env({Family::line_world, 0});
  Rng rng(3);
  const auto traj = collect_trajectory(policy, value, env, 40, rng);
  for (std::size_t t = 0; t < 40; ++t) {
    const std::size_t in_episode = t % 15;
    CHECK(traj[t].action == 1);
    CHECK(traj[t].reward == (in_episode == 14 ? 0.99 : -0.01));
    CHECK(traj[t].done == (in_episode == 14));
    CHECK(traj[t].state[in_episode] == 1.0);
  }
  const auto rets = episode_returns(traj, 1.0);
  REQUIRE(rets.size() == 3);
  CHECK(rets[0].value == Approx(0.85).epsilon(1e-12));
  CHECK(rets[0].complete);
  CHECK(rets[1].value == Approx(0.85).epsilon(1e-12));
  CHECK_FALSE(rets[2].complete);
  CHECK(rets[2].value == Approx(-0.10).epsilon(1e-12));
}

TEST_CASE("collection is reproducible from the seed", "[rollout]") {
  Rng init(2);
  const auto policy = checks::detail::random_net(init, {72, 16, 4}, Activation::relu, Head::softmax);
  const auto value = checks::detail::random_net(init, {72, 16, 1}, Activation::relu, Head::identity);
  auto run = [&] {
    Environment env({Family::grid_goal, 8});
    Rng rng(99);
    return collect_trajectory(policy, value, env, 300, rng);
  };
  CHECK(run() == run());
}

TEST_CASE("collection records behavior log-probs and values", "[rollout]") {
  Rng init(6);
  const auto policy = checks::detail::random_net(init, {24, 8, 2}, Activation::tanh, Head::softmax);
  const auto value = checks::detail::random_net(init, {24, 8, 1}, Activation::tanh, Head::identity);
  Environment env({Family::line_world, 1});
  Rng rng(7);
  const auto traj = collect_trajectory(policy, value, env, 50, rng);
  for (const auto& t : traj.transitions) {
    CHECK(t.log_prob_behavior == Approx(oracle::ref_log_prob(policy, t.state, t.action)).epsilon(1e-12));
    CHECK(t.value_est == Approx(oracle::ref_value(value, t.state)).epsilon(1e-12));
    CHECK_FALSE(t.adversarial);
  }
}

TEST_CASE("immediate advantages", "[rollout]") {
  MlpParams value({1, 1}, Activation::tanh, Head::identity);
  value.bias(0)[0] = 0.4;
  auto traj = compute_advantages(with_rewards({1.0}, {false}), value);
  CHECK(traj[0].advantage == Approx(0.6).epsilon(1e-15));
  CHECK(traj[0].value_est == 0.4);

  value.bias(0)[0] = 1.0;
  traj = compute_advantages(with_rewards({1.0, 1.0, 1.0}, {false, true, false}), value);
  for (const auto& t : traj.transitions) CHECK(t.advantage == 0.0);
  CHECK_THROWS_AS(compute_advantages(Trajectory{}, value), PreconditionError);
}

TEST_CASE("advantage identity on collected data", "[rollout]") {
  Rng init(9);
  const auto policy = checks::detail::random_net(init, {72, 16, 4}, Activation::tanh, Head::softmax);
  const auto value = checks::detail::random_net(init, {72, 16, 1}, Activation::tanh, Head::identity);
  const auto other = checks::detail::random_net(init, {72, 16, 1}, Activation::tanh, Head::identity);
  Environment env({Family::grid_goal, 4});
  Rng rng(10);
  const auto traj = compute_advantages(collect_trajectory(policy, value, env, 120, rng), other);
  for (const auto& t : traj.transitions) {
    CHECK(t.advantage == t.reward - t.value_est);
    CHECK(t.target == t.reward);
    CHECK(t.value_est == Approx(oracle::ref_value(other, t.state)).epsilon(1e-12));
  }
}

TEST_CASE("discounted return and GAE targets", "[rollout]") {
  const MlpParams zero({1, 1}, Activation::tanh, Head::identity);
  AdvantageOptions opts{AdvantageEstimator::discounted_return, 0.5, 0.95};
  auto traj = compute_advantages(with_rewards({1.0, 2.0, 4.0, 8.0}, {false, true, false, false}), zero, opts);
  CHECK(traj[0].target == 2.0);
  CHECK(traj[1].target == 2.0);
  CHECK(traj[2].target == 8.0);
  CHECK(traj[3].target == 8.0);

  MlpParams half({1, 1}, Activation::tanh, Head::identity);
  half.bias(0)[0] = 1.0;
  traj = compute_advantages(with_rewards({0.0, 0.0}, {false, false}), half, opts);
  CHECK(traj[1].target == 0.5);  // bootstraps from V(next_state)
  CHECK(traj[0].target == 0.25);

  opts = {AdvantageEstimator::gae, 0.5, 1.0};
  traj = compute_advantages(with_rewards({1.0, 1.0}, {false, true}), zero, opts);
  CHECK(traj[0].advantage == 1.5);
  CHECK(traj[1].advantage == 1.0);
  CHECK(traj[0].target == traj[0].advantage + traj[0].value_est);
}

TEST_CASE("episode returns", "[rollout]") {
  auto rets = episode_returns(with_rewards({1.0, 1.0, 1.0}, {false, false, true}), 0.999);
  REQUIRE(rets.size() == 1);
  CHECK(rets[0].value == Approx(2.997001).epsilon(1e-14));
  CHECK(rets[0].complete);

  rets = episode_returns(with_rewards({1.0, 1.0, 2.0}, {true, false, false}), 1.0);
  REQUIRE(rets.size() == 2);
  CHECK(rets[0].complete);
  CHECK_FALSE(rets[1].complete);
  CHECK(rets[1].value == 3.0);
  CHECK(episode_returns(Trajectory{}, 1.0).empty());
}

TEST_CASE("trajectory jsonl", "[rollout]") {
  auto traj = with_rewards({1.0, -0.5}, {false, true});
  traj.level = {Family::grid_goal, 3};
  std::ostringstream os;
  write_jsonl(traj, os);
  std::istringstream in(os.str());
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("t") == n);
    CHECK(j.at("level") == "GridGoal:3");
    CHECK(j.at("reward").get<double>() == traj[n].reward);
    ++n;
  }
  CHECK(n == 2);
}
