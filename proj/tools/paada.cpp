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

// Command-line front end: train, eval, report, selftest.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "checks.hpp"
#include "paada/paada.hpp"

namespace {

using namespace paada;

int cmd_train(const std::string& config_path, const std::optional<std::string>& mode, const std::optional<double>& xi,
              const std::optional<std::uint64_t>& seed, const std::optional<std::string>& out, bool quiet) {
  ExperimentConfig cfg = load_config(config_path);
  if (mode) cfg.modes = {parse_mode(*mode)};
  if (xi) cfg.xi = *xi;
  if (seed) cfg.seeds = {*seed};
  if (out) cfg.out_dir = *out;
  cfg.validate();
  const auto dir = run_experiment(cfg, quiet ? nullptr : &std::cerr);
  const auto rows = summarize(load_runs({dir}), 100);
  print_table(rows, std::cout);
  std::cout << "run directory: " << dir.string() << '\n';
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& config_path, std::optional<int> episodes,
             std::uint64_t seed) {
  const ExperimentConfig cfg = load_config(config_path);
  const MlpParams policy = load_checkpoint(checkpoint);
  std::optional<Family> family;
  for (Family f : cfg.families)
    if (observation_dim(f) == policy.input_dim() && num_actions(f) == policy.output_dim()) family = f;
  if (!family) throw ConfigError("checkpoint does not fit any family listed in the config");
  if (policy.head() != Head::softmax) throw ConfigError("checkpoint is not a policy network");
  const auto split = sample_levels(*family, cfg.m, cfg.xi, cfg.split_seed);
  const auto bounds = compute_bounds(*family, split.test, cfg.bounds_episodes, cfg.split_seed);
  const std::uint64_t before = checksum(policy);
  Rng rng(derive_seed(seed, "cli-eval"));
  const double discount = cfg.eval_discounted ? cfg.train.ppo.discount : 1.0;
  const auto ret = evaluate_zero_shot(PolicyView(policy), split.test, episodes.value_or(cfg.eval_episodes), rng,
                                      discount);
  if (checksum(policy) != before) throw NumericError("policy parameters changed during evaluation");
  const double r = ret.at(*family);
  std::cout << family_name(*family) << ": mean test return " << r << " over " << split.test.size()
            << " levels, normalized " << mean_normalized_return(ret, {{*family, bounds}}) << " (random "
            << bounds.random << ", oracle " << bounds.oracle << ")\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& runs, std::size_t window, const std::optional<std::string>& csv) {
  std::vector<std::filesystem::path> dirs(runs.begin(), runs.end());
  const auto series = load_runs(dirs);
  const auto rows = summarize(series, window);
  print_table(rows, std::cout);
  if (csv) {
    std::ofstream summary(*csv);
    if (!summary) throw IoError("cannot write '" + *csv + "'");
    write_summary_csv(rows, summary);
    const std::filesystem::path p(*csv);
    const auto series_path = p.parent_path() / (p.stem().string() + ".series.csv");
    std::ofstream s(series_path);
    if (!s) throw IoError("cannot write '" + series_path.string() + "'");
    write_series_csv(series, s);
  }
  return 0;
}

int cmd_selftest() {
  bool ok = true;
  auto line = [&](const char* name, const checks::Result& r) {
    std::printf("%s %-24s %s (%.1f s)\n", r.pass ? "ok  " : "FAIL", name, r.detail.c_str(), r.seconds);
    ok = ok && r.pass;
  };
  line("gradients", checks::gradient_check());
  line("forward-pass", checks::forward_oracle());
  line("adversarial-descent", checks::adversarial_convergence());
  line("merge-mixup", checks::combinatorial_invariants());
  line("level-oracle", checks::level_oracle());
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy-aware adversarial data augmentation for PPO on procedural toy levels"};
  app.require_subcommand(1);

  std::string config_path, checkpoint;
  std::optional<std::string> mode, out, csv;
  std::optional<double> xi;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::uint64_t eval_seed = 0;
  std::vector<std::string> runs;
  std::size_t window = 100;
  bool quiet = false;

  auto* train = app.add_subcommand("train", "run an experiment from a config file");
  train->add_option("--config", config_path, "config file")->required();
  train->add_option("--mode", mode, "ppo | paada | paada+mixup | mixreg");
  train->add_option("--xi", xi, "fraction of levels used for training");
  train->add_option("--seed", seed, "single run seed");
  train->add_option("--out", out, "output directory");
  train->add_flag("--quiet", quiet, "no progress lines");

  auto* eval = app.add_subcommand("eval", "zero-shot evaluation of a policy checkpoint");
  eval->add_option("--checkpoint", checkpoint, "policy checkpoint")->required();
  eval->add_option("--config", config_path, "config file")->required();
  eval->add_option("--episodes", episodes, "episodes per test level");
  eval->add_option("--seed", eval_seed, "evaluation seed");

  auto* report = app.add_subcommand("report", "summarize finished runs");
  report->add_option("--runs", runs, "run directories")->required()->expected(1, -1);
  report->add_option("--window", window, "evaluation sweeps per run in the final window");
  report->add_option("--csv", csv, "summary CSV path (series go next to it)");

  auto* selftest = app.add_subcommand("selftest", "gradient checks and oracle suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*train) return cmd_train(config_path, mode, xi, seed, out, quiet);
    if (*eval) return cmd_eval(checkpoint, config_path, episodes, eval_seed);
    if (*report) return cmd_report(runs, window, csv);
    if (*selftest) return cmd_selftest();
  } catch (const paada::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
