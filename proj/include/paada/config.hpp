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

// Experiment configuration as a flat text document:
//
//   # comment
//   experiment.families = LineWorld, GridGoal
//   experiment.xi = 0.25
//   ppo.clip_eps = 0.2
//
// One `key = value` per line, lists comma-separated. Unknown or repeated keys
// are errors. Keys left out keep their defaults.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "paada/augment.hpp"
#include "paada/env.hpp"
#include "paada/error.hpp"
#include "paada/ppo.hpp"

namespace paada {

struct ExperimentConfig {
  std::vector<Family> families = {Family::line_world, Family::grid_goal};
  std::size_t m = 100;
  double xi = 0.25;
  std::uint64_t split_seed = 0;
  std::vector<std::uint64_t> seeds = {0};
  std::vector<Mode> modes = {Mode::ppo};
  std::string out_dir = "runs";
  /// Epochs between zero-shot test sweeps.
  int eval_every = 10;
  int eval_episodes = 1;
  bool eval_discounted = false;
  /// Epochs between intermediate checkpoints; 0 writes only the final one.
  int checkpoint_every = 0;
  /// Random-policy episodes per test level for the lower normalization bound.
  int bounds_episodes = 20;
  TrainConfig train;
  /// Unset means the beta shape follows xi (see default_mixup_beta).
  std::optional<double> mixup_beta;

  /// Mixup settings with the beta shape resolved.
  MixupConfig resolved_mixup() const {
    MixupConfig mc = train.mixup;
    mc.beta = mixup_beta ? *mixup_beta : default_mixup_beta(xi);
    return mc;
  }

  void validate() const {
    if (families.empty()) throw ConfigError("experiment.families must not be empty");
    for (std::size_t i = 0; i < families.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (families[i] == families[j]) throw ConfigError("experiment.families lists a family twice");
    if (m == 0) throw ConfigError("experiment.m must be positive");
    if (!(xi > 0.0 && xi <= 1.0)) throw ConfigError("experiment.xi must lie in (0, 1]");
    if (seeds.empty()) throw ConfigError("experiment.seeds must not be empty");
    if (modes.empty()) throw ConfigError("experiment.modes must not be empty");
    if (out_dir.empty()) throw ConfigError("experiment.out_dir must not be empty");
    if (eval_every < 1) throw ConfigError("experiment.eval_every must be at least 1");
    if (eval_episodes < 1) throw ConfigError("experiment.eval_episodes must be at least 1");
    if (checkpoint_every < 0) throw ConfigError("experiment.checkpoint_every must be non-negative");
    if (bounds_episodes < 1) throw ConfigError("experiment.bounds_episodes must be at least 1");
    if (mixup_beta && !(*mixup_beta > 0.0)) throw ConfigError("mixup.beta must be positive");
    train.validate();
    resolved_mixup().validate();
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    const std::string item = trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline double to_double(std::string_view key, const std::string& v) {
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ConfigError(std::string(key) + ": '" + v + "' is not a number");
  return x;
}

inline std::uint64_t to_u64(std::string_view key, const std::string& v) {
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ConfigError(std::string(key) + ": '" + v + "' is not a non-negative integer");
  return x;
}

inline int to_int(std::string_view key, const std::string& v) {
  int x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ConfigError(std::string(key) + ": '" + v + "' is not an integer");
  return x;
}

inline bool to_bool(std::string_view key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(std::string(key) + ": '" + v + "' is not a boolean");
}

/// Shortest text that parses back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += fmt(items[i]);
  }
  return out;
}

inline AdvantageEstimator parse_estimator(std::string_view key, const std::string& v) {
  if (v == "immediate") return AdvantageEstimator::immediate;
  if (v == "discounted_return") return AdvantageEstimator::discounted_return;
  if (v == "gae") return AdvantageEstimator::gae;
  throw ConfigError(std::string(key) + ": unknown advantage estimator '" + v + "'");
}

inline std::string_view estimator_name(AdvantageEstimator e) {
  switch (e) {
    case AdvantageEstimator::immediate: return "immediate";
    case AdvantageEstimator::discounted_return: return "discounted_return";
    case AdvantageEstimator::gae: return "gae";
  }
  return "?";
}

struct Field {
  std::function<void(ExperimentConfig&, std::string_view, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

inline const std::vector<std::pair<std::string, Field>>& fields() {
  using C = ExperimentConfig;
  using K = std::string_view;
  using S = const std::string&;
  static const std::vector<std::pair<std::string, Field>> table = {
      {"experiment.families",
       {[](C& c, K, S v) {
          c.families.clear();
          for (const auto& f : split_list(v)) c.families.push_back(parse_family(f));
        },
        [](const C& c) { return join(c.families, [](Family f) { return std::string(family_name(f)); }); }}},
      {"experiment.m", {[](C& c, K k, S v) { c.m = to_u64(k, v); }, [](const C& c) { return std::to_string(c.m); }}},
      {"experiment.xi",
       {[](C& c, K k, S v) { c.xi = to_double(k, v); }, [](const C& c) { return format_double(c.xi); }}},
      {"experiment.split_seed",
       {[](C& c, K k, S v) { c.split_seed = to_u64(k, v); },
        [](const C& c) { return std::to_string(c.split_seed); }}},
      {"experiment.seeds",
       {[](C& c, K k, S v) {
          c.seeds.clear();
          for (const auto& s : split_list(v)) c.seeds.push_back(to_u64(k, s));
        },
        [](const C& c) { return join(c.seeds, [](std::uint64_t s) { return std::to_string(s); }); }}},
      {"experiment.modes",
       {[](C& c, K, S v) {
          c.modes.clear();
          for (const auto& s : split_list(v)) c.modes.push_back(parse_mode(s));
        },
        [](const C& c) { return join(c.modes, [](Mode m) { return std::string(mode_name(m)); }); }}},
      {"experiment.out_dir", {[](C& c, K, S v) { c.out_dir = v; }, [](const C& c) { return c.out_dir; }}},
      {"experiment.eval_every",
       {[](C& c, K k, S v) { c.eval_every = to_int(k, v); }, [](const C& c) { return std::to_string(c.eval_every); }}},
      {"experiment.eval_episodes",
       {[](C& c, K k, S v) { c.eval_episodes = to_int(k, v); },
        [](const C& c) { return std::to_string(c.eval_episodes); }}},
      {"experiment.eval_discounted",
       {[](C& c, K k, S v) { c.eval_discounted = to_bool(k, v); },
        [](const C& c) { return std::string(c.eval_discounted ? "true" : "false"); }}},
      {"experiment.checkpoint_every",
       {[](C& c, K k, S v) { c.checkpoint_every = to_int(k, v); },
        [](const C& c) { return std::to_string(c.checkpoint_every); }}},
      {"experiment.bounds_episodes",
       {[](C& c, K k, S v) { c.bounds_episodes = to_int(k, v); },
        [](const C& c) { return std::to_string(c.bounds_episodes); }}},
      {"net.hidden",
       {[](C& c, K k, S v) {
          c.train.net.hidden.clear();
          for (const auto& s : split_list(v)) c.train.net.hidden.push_back(to_u64(k, s));
        },
        [](const C& c) { return join(c.train.net.hidden, [](std::size_t h) { return std::to_string(h); }); }}},
      {"net.activation",
       {[](C& c, K k, S v) {
          if (v == "tanh")
            c.train.net.activation = Activation::tanh;
          else if (v == "relu")
            c.train.net.activation = Activation::relu;
          else
            throw ConfigError(std::string(k) + ": unknown activation '" + v + "'");
        },
        [](const C& c) { return std::string(c.train.net.activation == Activation::tanh ? "tanh" : "relu"); }}},
      {"rollout.length",
       {[](C& c, K k, S v) { c.train.rollout.length = to_u64(k, v); },
        [](const C& c) { return std::to_string(c.train.rollout.length); }}},
      {"rollout.max_trajectories",
       {[](C& c, K k, S v) { c.train.rollout.max_trajectories = to_u64(k, v); },
        [](const C& c) { return std::to_string(c.train.rollout.max_trajectories); }}},
      {"rollout.advantage",
       {[](C& c, K k, S v) { c.train.rollout.estimator = parse_estimator(k, v); },
        [](const C& c) { return std::string(estimator_name(c.train.rollout.estimator)); }}},
      {"rollout.gae_lambda",
       {[](C& c, K k, S v) { c.train.rollout.gae_lambda = to_double(k, v); },
        [](const C& c) { return format_double(c.train.rollout.gae_lambda); }}},
      {"ppo.clip_eps",
       {[](C& c, K k, S v) { c.train.ppo.clip_eps = to_double(k, v); },
        [](const C& c) { return format_double(c.train.ppo.clip_eps); }}},
      {"ppo.policy_lr",
       {[](C& c, K k, S v) { c.train.ppo.policy_lr = to_double(k, v); },
        [](const C& c) { return format_double(c.train.ppo.policy_lr); }}},
      {"ppo.value_lr",
       {[](C& c, K k, S v) { c.train.ppo.value_lr = to_double(k, v); },
        [](const C& c) { return format_double(c.train.ppo.value_lr); }}},
      {"ppo.update_epochs",
       {[](C& c, K k, S v) { c.train.ppo.update_epochs = to_int(k, v); },
        [](const C& c) { return std::to_string(c.train.ppo.update_epochs); }}},
      {"ppo.minibatch",
       {[](C& c, K k, S v) { c.train.ppo.minibatch = to_u64(k, v); },
        [](const C& c) { return std::to_string(c.train.ppo.minibatch); }}},
      {"ppo.entropy_coef",
       {[](C& c, K k, S v) { c.train.ppo.entropy_coef = to_double(k, v); },
        [](const C& c) { return format_double(c.train.ppo.entropy_coef); }}},
      {"ppo.pretrain_epochs",
       {[](C& c, K k, S v) { c.train.ppo.pretrain_epochs = to_int(k, v); },
        [](const C& c) { return std::to_string(c.train.ppo.pretrain_epochs); }}},
      {"ppo.discount",
       {[](C& c, K k, S v) { c.train.ppo.discount = to_double(k, v); },
        [](const C& c) { return format_double(c.train.ppo.discount); }}},
      {"ppo.epochs",
       {[](C& c, K k, S v) { c.train.ppo.epochs = to_int(k, v); },
        [](const C& c) { return std::to_string(c.train.ppo.epochs); }}},
      {"ppo.nu",
       {[](C& c, K k, S v) { c.train.ppo.nu = to_double(k, v); },
        [](const C& c) { return format_double(c.train.ppo.nu); }}},
      {"ppo.adam_beta1",
       {[](C& c, K k, S v) { c.train.ppo.adam_beta1 = to_double(k, v); },
        [](const C& c) { return format_double(c.train.ppo.adam_beta1); }}},
      {"ppo.adam_beta2",
       {[](C& c, K k, S v) { c.train.ppo.adam_beta2 = to_double(k, v); },
        [](const C& c) { return format_double(c.train.ppo.adam_beta2); }}},
      {"ppo.adam_eps",
       {[](C& c, K k, S v) { c.train.ppo.adam_eps = to_double(k, v); },
        [](const C& c) { return format_double(c.train.ppo.adam_eps); }}},
      {"adv.stepsize",
       {[](C& c, K k, S v) { c.train.adv.stepsize = to_double(k, v); },
        [](const C& c) { return format_double(c.train.adv.stepsize); }}},
      {"adv.max_steps",
       {[](C& c, K k, S v) { c.train.adv.max_steps = to_int(k, v); },
        [](const C& c) { return std::to_string(c.train.adv.max_steps); }}},
      {"adv.tolerance",
       {[](C& c, K k, S v) { c.train.adv.tolerance = to_double(k, v); },
        [](const C& c) { return format_double(c.train.adv.tolerance); }}},
      {"adv.lagrangian",
       {[](C& c, K k, S v) { c.train.adv.lagrangian = to_double(k, v); },
        [](const C& c) { return format_double(c.train.adv.lagrangian); }}},
      {"adv.value_detached",
       {[](C& c, K k, S v) { c.train.adv.value_detached = to_bool(k, v); },
        [](const C& c) { return std::string(c.train.adv.value_detached ? "true" : "false"); }}},
      {"adv.clip_to_obs_bounds",
       {[](C& c, K k, S v) { c.train.adv.clip_to_obs_bounds = to_bool(k, v); },
        [](const C& c) { return std::string(c.train.adv.clip_to_obs_bounds ? "true" : "false"); }}},
      {"mixup.alpha",
       {[](C& c, K k, S v) { c.train.mixup.alpha = to_double(k, v); },
        [](const C& c) { return format_double(c.train.mixup.alpha); }}},
      {"mixup.beta",
       {[](C& c, K k, S v) { c.mixup_beta = to_double(k, v); },
        [](const C& c) { return c.mixup_beta ? format_double(*c.mixup_beta) : std::string("auto"); }}},
      {"mixup.forced_lambda",
       {[](C& c, K k, S v) {
          if (v == "none")
            c.train.mixup.forced_lambda.reset();
          else
            c.train.mixup.forced_lambda = to_double(k, v);
        },
        [](const C& c) {
          return c.train.mixup.forced_lambda ? format_double(*c.train.mixup.forced_lambda) : std::string("none");
        }}},
  };
  return table;
}

inline const Field& field(std::string_view key) {
  for (const auto& [name, f] : fields())
    if (name == key) return f;
  throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

}  // namespace detail

/// Sets one key from its text value. "auto" for mixup.beta restores the
/// xi-dependent default.
inline void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  const std::string v = detail::trim(value);
  if (key == "mixup.beta" && v == "auto") {
    detail::field(key);
    cfg.mixup_beta.reset();
    return;
  }
  detail::field(key).set(cfg, key, v);
}

/// Parses a config document on top of the defaults and validates the result.
inline ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::map<std::string, int, std::less<>> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value', got '" + body + "'");
    const std::string key = detail::trim(std::string_view(body).substr(0, eq));
    if (auto it = seen.find(key); it != seen.end())
      throw ConfigError("line " + std::to_string(lineno) + ": key '" + key + "' already set on line " +
                        std::to_string(it->second));
    seen.emplace(key, lineno);
    try {
      set_config_value(cfg, key, std::string_view(body).substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Every key with its current value, in canonical order.
inline std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [name, f] : detail::fields()) out.emplace_back(name, f.get(cfg));
  return out;
}

/// Canonical document; parse_config(to_text(c)) reproduces c.
inline std::string to_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : config_entries(cfg)) out += k + " = " + v + "\n";
  return out;
}

}  // namespace paada
