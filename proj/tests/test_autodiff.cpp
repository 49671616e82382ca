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

Transition make_transition(Vec state, int action, double target, double advantage = 0.0, double logp = 0.0) {
  Transition t;
  t.state = std::move(state);
  t.action = action;
  t.target = target;
  t.reward = target;
  t.advantage = advantage;
  t.log_prob_behavior = logp;
  return t;
}

}  // namespace

TEST_CASE("zero network gives a uniform policy", "[forward]") {
  const MlpParams p({5, 7, 4}, Activation::tanh, Head::softmax);
  const auto probs = policy_forward(p, Vec{0.3, -1.0, 2.0, 0.0, 5.0});
  REQUIRE(probs.size() == 4);
  for (double v : probs) CHECK(v == 0.25);
}

TEST_CASE("single linear layer softmax", "[forward]") {
  MlpParams p({2, 2}, Activation::tanh, Head::softmax);
  auto w = p.weights(0);
  w[0] = 1.0;
  w[3] = 1.0;
  const auto probs = policy_forward(p, Vec{1.0, 0.0});
  const double e = std::exp(1.0);
  CHECK(probs[0] == Approx(e / (e + 1.0)).epsilon(1e-14));
  CHECK(probs[1] == Approx(1.0 / (e + 1.0)).epsilon(1e-14));
  CHECK(probs[0] == Approx(0.7311).margin(1e-4));
}

TEST_CASE("value network arithmetic", "[forward]") {
  const MlpParams zero({3, 8, 1}, Activation::relu, Head::identity);
  CHECK(value_forward(zero, Vec{1.0, 2.0, 3.0}) == 0.0);

  MlpParams lin({2, 1}, Activation::tanh, Head::identity);
  lin.weights(0)[0] = 2.0;
  lin.weights(0)[1] = 3.0;
  lin.bias(0)[0] = 1.0;
  CHECK(value_forward(lin, Vec{1.0, 1.0}) == 6.0);
}

TEST_CASE("forward pass matches the straight-line reference", "[forward]") {
  const auto r = checks::forward_oracle(100);
  INFO(r.detail);
  CHECK(r.pass);
}

TEST_CASE("probabilities are normalized", "[forward]") {
  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    const auto p = checks::detail::random_net(rng, {6, 32, 32, 5}, Activation::tanh, Head::softmax);
    const auto probs = policy_forward(p, checks::detail::random_vec(rng, 6, -3.0, 3.0));
    double s = 0.0;
    for (double v : probs) {
      CHECK(v > 0.0);
      s += v;
    }
    CHECK(std::fabs(s - 1.0) <= 1e-9);
  }
}

TEST_CASE("forward errors", "[forward]") {
  const MlpParams p({3, 4, 2}, Activation::tanh, Head::softmax);
  CHECK_THROWS_AS(policy_forward(p, Vec{1.0, 2.0}), ShapeError);
  CHECK_THROWS_AS(policy_forward(p, Vec{1.0, NAN, 0.0}), NumericError);
  const MlpParams v({3, 1}, Activation::tanh, Head::identity);
  CHECK_THROWS_AS(value_forward(v, Vec{1.0, 2.0, 3.0, 4.0}), ShapeError);
  CHECK_THROWS_AS(value_forward(v, Vec{INFINITY, 0.0, 0.0}), NumericError);
  CHECK_THROWS_AS(MlpParams({3}, Activation::tanh, Head::identity), ShapeError);
}

TEST_CASE("vectorized tanh tracks libm", "[forward]") {
  double worst = 0.0;
  for (int i = -200000; i <= 200000; ++i) {
    const double x = i * 1e-4;
    const double ref = std::tanh(x);
    worst = std::max(worst, std::fabs(detail::tanh(x) - ref) / std::max(std::fabs(ref), 1e-300));
  }
  CHECK(worst <= 1e-15);
  CHECK(detail::tanh(0.0) == 0.0);
  CHECK(detail::tanh(50.0) == 1.0);
  CHECK(detail::tanh(-50.0) == -1.0);
}

TEST_CASE("grad_params of a constant objective is zero", "[grad]") {
  Rng rng(3);
  const auto p = checks::detail::random_net(rng, {4, 8, 3}, Activation::tanh, Head::softmax);
  std::vector<Transition> batch;
  for (int i = 0; i < 6; ++i) batch.push_back(make_transition(checks::detail::random_vec(rng, 4), i % 3, 0.0, 0.0, -1.0));
  const auto g = grad_params(PpoClipLoss{0.2, 0.0}, p, std::span<const Transition>(batch));
  for (double v : g.gradient.flat()) CHECK(v == 0.0);
}

TEST_CASE("value regression at its minimum has zero gradient", "[grad]") {
  Rng rng(4);
  const auto v = checks::detail::random_net(rng, {3, 8, 1}, Activation::tanh, Head::identity);
  std::vector<Transition> batch;
  for (int i = 0; i < 5; ++i) {
    auto s = checks::detail::random_vec(rng, 3);
    const double target = value_forward(v, s);
    batch.push_back(make_transition(std::move(s), 0, target));
  }
  const auto g = grad_params(ValueRegressionLoss{}, v, std::span<const Transition>(batch));
  CHECK(g.objective == Approx(0.0).margin(1e-30));
  for (double x : g.gradient.flat()) CHECK(x == Approx(0.0).margin(1e-15));
}

TEST_CASE("grad_params rejects empty batches", "[grad]") {
  const MlpParams p({2, 2}, Activation::tanh, Head::softmax);
  CHECK_THROWS_AS(grad_params(PpoClipLoss{}, p, std::span<const Transition>()), PreconditionError);
  const MlpParams v({2, 1}, Activation::tanh, Head::identity);
  CHECK_THROWS_AS(grad_params(ValueRegressionLoss{}, v, std::span<const Transition>()), PreconditionError);
}

TEST_CASE("analytic gradients match central differences", "[grad]") {
  for (int k = 0; k < checks::kGradCases; ++k) {
    const auto kind = static_cast<checks::GradCase>(k);
    for (std::uint64_t s = 0; s < 5; ++s) {
      const double err = checks::gradient_instance(kind, 1000 + s);
      INFO(checks::grad_case_name(kind) << " seed " << s << " rel err " << err);
      CHECK(err <= 1e-4);
    }
  }
}

TEST_CASE("value input gradient of a linear layer is its weight row", "[grad]") {
  MlpParams v({3, 1}, Activation::tanh, Head::identity);
  const Vec w{0.5, -2.0, 3.0};
  std::copy(w.begin(), w.end(), v.weights(0).begin());
  const MlpParams p({3, 2}, Activation::tanh, Head::softmax);
  const auto t = make_transition({0.0, 0.0, 0.0}, 0, 1.0);
  for (const Vec& s : {Vec{0.0, 0.0, 0.0}, Vec{1.0, -4.0, 2.5}}) {
    const auto g = grad_input({InputObjectiveKind::value, 0.0, false}, p, v, t, s, s);
    REQUIRE(g.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(g[i] == w[i]);
  }
}

TEST_CASE("paada objective is stationary at the anchor for a state-blind policy", "[grad]") {
  const MlpParams p({4, 6, 4}, Activation::tanh, Head::softmax);
  MlpParams v({4, 1}, Activation::tanh, Head::identity);
  v.bias(0)[0] = 0.7;
  const Vec s{0.1, -0.2, 0.3, 0.9};
  const auto t = make_transition(s, 2, 1.0);
  const auto g = grad_input({InputObjectiveKind::paada, 0.01, false}, p, v, t, s, s);
  for (double x : g) CHECK(x == 0.0);
}

TEST_CASE("grad_input shape errors", "[grad]") {
  const MlpParams p({3, 2}, Activation::tanh, Head::softmax);
  const MlpParams v({3, 1}, Activation::tanh, Head::identity);
  const auto t = make_transition({0.0, 0.0, 0.0}, 0, 1.0);
  CHECK_THROWS_AS(grad_input({InputObjectiveKind::paada, 0.01, false}, p, v, t, Vec{0.0, 0.0, 0.0}, Vec{0.0, 0.0}),
                  ShapeError);
  CHECK_THROWS_AS(grad_input({InputObjectiveKind::paada, 0.01, false}, p, v, t, Vec{0.0, 0.0}, Vec{0.0, 0.0}),
                  ShapeError);
}

TEST_CASE("checkpoint round trip", "[checkpoint]") {
  Rng rng(8);
  const auto p = checks::detail::random_net(rng, {5, 9, 3}, Activation::relu, Head::softmax);
  const auto bytes = serialize(p);
  const auto q = deserialize(bytes);
  CHECK(q == p);
  CHECK(checksum(q) == checksum(p));

  auto truncated = bytes;
  truncated.resize(truncated.size() - 3);
  CHECK_THROWS_AS(deserialize(truncated), IoError);
  auto garbled = bytes;
  garbled[0] = 'X';
  CHECK_THROWS_AS(deserialize(garbled), IoError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/dir/x.ckpt"), IoError);
}
