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

// Experiment orchestration: level splits, zero-shot evaluation, normalized
// returns, run directories and the summary report.
//
// Run directory layout:
//   <out>/manifest.json                   resolved config, level lists, bounds
//   <out>/<mode>/seed<k>/metrics.jsonl    one record per training epoch
//   <out>/<mode>/seed<k>/policy-<Family>.ckpt, value-<Family>.ckpt

#include <chrono>
#include <cmath>
#include <concepts>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "paada/checkpoint.hpp"
#include "paada/config.hpp"
#include "paada/env.hpp"
#include "paada/mlp.hpp"
#include "paada/parallel.hpp"
#include "paada/ppo.hpp"
#include "paada/random.hpp"
#include "paada/rollout.hpp"

namespace paada {

inline constexpr std::string_view kVersion = "0.1.0";

using FamilyValues = std::map<Family, double>;

/// Forward-only handle on a policy network. Evaluation code receives this
/// instead of the parameters, so it has no way to modify them.
class PolicyView {
 public:
  explicit PolicyView(const MlpParams& params) : params_(&params) {
    if (params.head() != Head::softmax) throw ShapeError("policy view needs a softmax head");
  }
  Matrix probabilities(const Matrix& states) const { return policy_forward_batch(*params_, states); }
  std::size_t input_dim() const { return params_->input_dim(); }

 private:
  const MlpParams* params_;
};

/// Uniform distribution over a family's actions.
class UniformPolicy {
 public:
  explicit UniformPolicy(std::size_t actions) : actions_(actions) {}
  Matrix probabilities(const Matrix& states) const {
    return Matrix(actions_, states.cols, 1.0 / static_cast<double>(actions_));
  }

 private:
  std::size_t actions_;
};

template <typename P>
concept ActionPolicy = requires(const P& p, const Matrix& m) {
  { p.probabilities(m) } -> std::same_as<Matrix>;
};

namespace detail {

struct EvalEpisode {
  Environment env;
  Rng rng;
  std::vector<double> obs;
  double ret = 0.0;
  double weight = 1.0;
};

}  // namespace detail

/// Mean episode return per family of `policy` on `levels`, `episodes` runs
/// per level. Episodes of one family advance in lockstep and share batched
/// forward passes; each episode samples from its own stream keyed by one draw
/// from `rng`, its level and its index. Undiscounted unless `discount` < 1.
template <ActionPolicy P>
FamilyValues evaluate_zero_shot(const P& policy, std::span<const LevelSpec> levels, int episodes, Rng& rng,
                                double discount = 1.0) {
  if (levels.empty()) throw PreconditionError("zero-shot evaluation needs at least one test level");
  if (episodes < 1) throw PreconditionError("episodes per level must be positive");
  const std::uint64_t base = rng();
  std::map<Family, std::vector<detail::EvalEpisode>> groups;
  for (const auto& level : levels)
    for (int e = 0; e < episodes; ++e) {
      detail::EvalEpisode ep{Environment(level), Rng(derive_seed(base, level.to_string(), std::uint64_t(e))), {}};
      ep.obs = ep.env.reset();
      groups[level.family].push_back(std::move(ep));
    }

  FamilyValues out;
  for (auto& [family, eps] : groups) {
    std::vector<std::size_t> active(eps.size());
    std::iota(active.begin(), active.end(), 0);
    while (!active.empty()) {
      Matrix states(observation_dim(family), active.size());
      for (std::size_t c = 0; c < active.size(); ++c) states.set_col(c, eps[active[c]].obs);
      const Matrix probs = policy.probabilities(states);
      if (probs.rows != num_actions(family) || probs.cols != active.size())
        throw ShapeError("policy output does not match the action set of " + std::string(family_name(family)));
      std::vector<std::size_t> still;
      std::vector<double> col(probs.rows);
      for (std::size_t c = 0; c < active.size(); ++c) {
        auto& ep = eps[active[c]];
        for (std::size_t r = 0; r < probs.rows; ++r) col[r] = probs(r, c);
        StepResult step = ep.env.step(sample_action(col, ep.rng));
        ep.ret += ep.weight * step.reward;
        ep.weight *= discount;
        if (!step.done) {
          ep.obs = std::move(step.observation);
          still.push_back(active[c]);
        }
      }
      active.swap(still);
    }
    double total = 0.0;
    for (const auto& ep : eps) total += ep.ret;
    out[family] = total / static_cast<double>(eps.size());
  }
  return out;
}

inline FamilyValues evaluate_zero_shot(const MlpParams& policy, std::span<const LevelSpec> levels, int episodes,
                                       Rng& rng, double discount = 1.0) {
  return evaluate_zero_shot(PolicyView(policy), levels, episodes, rng, discount);
}

/// Per-family (R_min, R_max) anchors for the normalized return.
struct NormBounds {
  double random = 0.0;
  double oracle = 0.0;
};
using FamilyBounds = std::map<Family, NormBounds>;

/// Mean over families of (R - R_min) / (R_max - R_min). Not clamped.
inline double mean_normalized_return(const FamilyValues& returns, const FamilyBounds& bounds) {
  if (returns.empty()) throw PreconditionError("no family returns to normalize");
  double total = 0.0;
  for (const auto& [family, r] : returns) {
    const auto it = bounds.find(family);
    if (it == bounds.end())
      throw ConfigError("no normalization bounds for " + std::string(family_name(family)));
    const double span = it->second.oracle - it->second.random;
    if (!(span > 0.0))
      throw ConfigError("degenerate normalization bounds for " + std::string(family_name(family)));
    total += (r - it->second.random) / span;
  }
  return total / static_cast<double>(returns.size());
}

/// R_min: uniform-random policy mean over the test levels; R_max: mean
/// shortest-path return over the same levels.
inline NormBounds compute_bounds(Family family, std::span<const LevelSpec> test, int episodes, std::uint64_t seed) {
  NormBounds b;
  Rng rng(derive_seed(seed, "bounds", family_name(family)));
  b.random = evaluate_zero_shot(UniformPolicy(num_actions(family)), test, episodes, rng).at(family);
  double total = 0.0;
  for (const auto& l : test) total += oracle_return(l);
  b.oracle = total / static_cast<double>(test.size());
  if (!(b.oracle > b.random)) throw ConfigError("degenerate normalization bounds for " + std::string(family_name(family)));
  return b;
}

struct FamilySetup {
  Family family;
  LevelSplit split;
  NormBounds bounds;
};

/// Level splits and normalization anchors, shared by every mode and seed.
inline std::vector<FamilySetup> prepare_families(const ExperimentConfig& cfg) {
  std::vector<FamilySetup> out;
  for (Family f : cfg.families) {
    FamilySetup s{f, sample_levels(f, cfg.m, cfg.xi, cfg.split_seed), {}};
    s.bounds = compute_bounds(f, s.split.test, cfg.bounds_episodes, cfg.split_seed);
    out.push_back(std::move(s));
  }
  return out;
}

namespace detail {

inline nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

inline nlohmann::json family_json(const FamilyValues& v) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [f, x] : v) j[std::string(family_name(f))] = number_or_null(x);
  return j;
}

inline std::string manifest_json(const ExperimentConfig& cfg, const std::vector<FamilySetup>& setups) {
  nlohmann::json j;
  j["version"] = std::string(kVersion);
  nlohmann::json c = nlohmann::json::object();
  for (const auto& [k, v] : config_entries(cfg)) c[k] = v;
  j["config"] = c;
  j["config_text"] = to_text(cfg);
  j["resolved_mixup_beta"] = cfg.resolved_mixup().beta;
  j["xi"] = cfg.xi;
  j["m"] = cfg.m;
  nlohmann::json modes = nlohmann::json::array();
  for (Mode m : cfg.modes) modes.push_back(std::string(mode_name(m)));
  j["modes"] = modes;
  j["seeds"] = cfg.seeds;
  nlohmann::json fams = nlohmann::json::object();
  for (const auto& s : setups) {
    nlohmann::json f;
    std::vector<std::string> train, test;
    for (const auto& l : s.split.train) train.push_back(l.to_string());
    for (const auto& l : s.split.test) test.push_back(l.to_string());
    f["train_size"] = train.size();
    f["test_size"] = test.size();
    f["train"] = train;
    f["test"] = test;
    f["bounds"] = {{"random", s.bounds.random}, {"oracle", s.bounds.oracle}};
    fams[std::string(family_name(s.family))] = f;
  }
  j["families"] = fams;
  return j.dump(2) + "\n";
}

inline std::filesystem::path run_path(const std::filesystem::path& out, Mode mode, std::uint64_t seed) {
  return out / std::string(mode_name(mode)) / ("seed" + std::to_string(seed));
}

inline std::ofstream open_for_write(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::trunc);
  if (!f) throw IoError("cannot write '" + p.string() + "'");
  return f;
}

}  // namespace detail

/// One epoch of one run as written to metrics.jsonl. Test fields are present
/// only on evaluation epochs.
struct MetricsRecord {
  int epoch = 0;
  Mode mode = Mode::ppo;
  std::uint64_t seed = 0;
  FamilyValues train_return;
  std::optional<FamilyValues> test_return;
  std::optional<double> mnr;
  AdvStats adv;
  double wall_clock_s = 0.0;

  std::string to_json_line() const {
    nlohmann::json j;
    j["epoch"] = epoch;
    j["mode"] = std::string(mode_name(mode));
    j["seed"] = seed;
    j["train_return"] = detail::family_json(train_return);
    j["test_return"] = test_return ? detail::family_json(*test_return) : nlohmann::json();
    j["mnr"] = mnr ? detail::number_or_null(*mnr) : nlohmann::json();
    j["adv"] = {{"count", adv.count},
                {"mean_steps", adv.mean_steps()},
                {"mean_grad_norm", adv.mean_grad_norm()},
                {"mean_shift", adv.mean_shift()}};
    j["wall_clock_s"] = wall_clock_s;
    return j.dump();
  }
};

/// Training configuration one run actually uses (mixup beta resolved).
inline TrainConfig run_train_config(const ExperimentConfig& cfg, Mode mode) {
  TrainConfig tc = cfg.train;
  tc.ppo.mode = mode;
  tc.mixup = cfg.resolved_mixup();
  return tc;
}

/// Trains one (mode, seed) run on every family in lockstep, evaluating on the
/// full test sets every cfg.eval_every epochs and after the last epoch.
inline void run_single(const ExperimentConfig& cfg, const std::vector<FamilySetup>& setups, Mode mode,
                       std::uint64_t seed, const std::filesystem::path& dir, std::ostream* log = nullptr,
                       std::mutex* log_mutex = nullptr) {
  std::ofstream metrics = detail::open_for_write(dir / "metrics.jsonl");
  const TrainConfig tc = run_train_config(cfg, mode);
  std::vector<Trainer> trainers;
  trainers.reserve(setups.size());
  for (const auto& s : setups)
    trainers.emplace_back(tc, s.split.train, derive_seed(seed, "family", family_name(s.family)));
  FamilyBounds bounds;
  for (const auto& s : setups) bounds[s.family] = s.bounds;
  const double eval_discount = cfg.eval_discounted ? tc.ppo.discount : 1.0;
  const auto start = std::chrono::steady_clock::now();

  auto save = [&](const std::string& suffix) {
    for (std::size_t i = 0; i < setups.size(); ++i) {
      const std::string fam(family_name(setups[i].family));
      save_checkpoint(trainers[i].policy(), (dir / ("policy-" + fam + suffix + ".ckpt")).string());
      save_checkpoint(trainers[i].value(), (dir / ("value-" + fam + suffix + ".ckpt")).string());
    }
  };

  for (int e = 1; e <= tc.ppo.epochs; ++e) {
    MetricsRecord rec;
    rec.epoch = e;
    rec.mode = mode;
    rec.seed = seed;
    for (std::size_t i = 0; i < setups.size(); ++i) {
      const EpochStats st = trainers[i].run_epoch();
      rec.train_return[setups[i].family] = st.train_return;
      rec.adv += st.adv;
    }
    if (e % cfg.eval_every == 0 || e == tc.ppo.epochs) {
      FamilyValues test;
      for (std::size_t i = 0; i < setups.size(); ++i) {
        Rng rng(derive_seed(seed, "eval", std::uint64_t(e), family_name(setups[i].family)));
        const auto r = evaluate_zero_shot(PolicyView(trainers[i].policy()), setups[i].split.test, cfg.eval_episodes,
                                          rng, eval_discount);
        test[setups[i].family] = r.at(setups[i].family);
      }
      rec.mnr = mean_normalized_return(test, bounds);
      rec.test_return = std::move(test);
    }
    rec.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    metrics << rec.to_json_line() << '\n';
    if (!metrics) throw IoError("write to '" + (dir / "metrics.jsonl").string() + "' failed");
    if (cfg.checkpoint_every > 0 && e % cfg.checkpoint_every == 0 && e != tc.ppo.epochs)
      save("-e" + std::to_string(e));
    if (log && rec.test_return) {
      std::ostringstream line;
      line << "[" << mode_name(mode) << " seed " << seed << "] epoch " << e << " mnr " << std::setprecision(4)
           << *rec.mnr;
      for (const auto& [f, v] : *rec.test_return) line << " " << family_name(f) << " " << v;
      line << " (" << std::setprecision(1) << std::fixed << rec.wall_clock_s << " s)\n";
      std::scoped_lock lock(*log_mutex);
      *log << line.str() << std::flush;
    }
  }
  save("");
}

/// Runs every (mode, seed) pair of the config into cfg.out_dir and returns
/// that directory. Output locations are created and probed before any
/// training starts. Independent runs execute in parallel.
inline std::filesystem::path run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
  cfg.validate();
  const std::filesystem::path out(cfg.out_dir);
  const auto setups = prepare_families(cfg);

  struct Job {
    Mode mode;
    std::uint64_t seed;
    std::filesystem::path dir;
  };
  std::vector<Job> jobs;
  try {
    std::filesystem::create_directories(out);
    for (Mode m : cfg.modes)
      for (std::uint64_t s : cfg.seeds) {
        jobs.push_back({m, s, detail::run_path(out, m, s)});
        std::filesystem::create_directories(jobs.back().dir);
        detail::open_for_write(jobs.back().dir / "metrics.jsonl");
      }
  } catch (const std::filesystem::filesystem_error& e) {
    throw IoError(std::string("cannot prepare output directory: ") + e.what());
  }
  {
    auto manifest = detail::open_for_write(out / "manifest.json");
    manifest << detail::manifest_json(cfg, setups);
    if (!manifest) throw IoError("write to '" + (out / "manifest.json").string() + "' failed");
  }

  std::mutex log_mutex;
  parallel_for(jobs.size(), [&](std::size_t i) {
    run_single(cfg, setups, jobs[i].mode, jobs[i].seed, jobs[i].dir, log, &log_mutex);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Reporting

/// Evaluation sweeps of one (mode, seed) run.
struct RunSeries {
  std::string mode;
  double xi = 0.0;
  std::uint64_t seed = 0;
  std::vector<int> epochs;
  /// Metric name ("LineWorld", "GridGoal", "MNR") to one value per sweep.
  std::map<std::string, std::vector<double>> values;
};

struct SummaryRow {
  std::string mode;
  double xi = 0.0;
  std::string metric;
  /// Mean and sample standard deviation (n - 1) over every (seed, sweep)
  /// value in the windows.
  double mean = 0.0;
  double std = 0.0;
  /// Standard error of the per-seed window means (NaN with one seed).
  double se = 0.0;
  std::size_t seeds = 0;
  std::size_t samples = 0;
};

/// Reads every metrics stream under the given run directories.
inline std::vector<RunSeries> load_runs(const std::vector<std::filesystem::path>& dirs) {
  std::vector<RunSeries> out;
  for (const auto& dir : dirs) {
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw IoError("missing manifest in '" + dir.string() + "'");
    nlohmann::json manifest;
    try {
      manifest = nlohmann::json::parse(mf);
    } catch (const nlohmann::json::exception& e) {
      throw IoError("malformed manifest in '" + dir.string() + "': " + e.what());
    }
    const double xi = manifest.at("xi").get<double>();
    for (const auto& mode : manifest.at("modes"))
      for (const auto& seed : manifest.at("seeds")) {
        const auto path = detail::run_path(dir, parse_mode(mode.get<std::string>()), seed.get<std::uint64_t>()) /
                          "metrics.jsonl";
        std::ifstream in(path);
        if (!in) throw IoError("missing metrics file '" + path.string() + "'");
        RunSeries rs{mode.get<std::string>(), xi, seed.get<std::uint64_t>(), {}, {}};
        std::string line;
        while (std::getline(in, line)) {
          if (line.empty()) continue;
          nlohmann::json j;
          try {
            j = nlohmann::json::parse(line);
          } catch (const nlohmann::json::exception& e) {
            throw IoError("malformed record in '" + path.string() + "': " + e.what());
          }
          if (j.at("test_return").is_null()) continue;
          rs.epochs.push_back(j.at("epoch").get<int>());
          for (const auto& [fam, v] : j.at("test_return").items())
            rs.values[fam].push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>());
          rs.values["MNR"].push_back(j.at("mnr").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                           : j.at("mnr").get<double>());
        }
        if (rs.epochs.empty()) throw IoError("no evaluation records in '" + path.string() + "'");
        out.push_back(std::move(rs));
      }
  }
  if (out.empty()) throw IoError("no completed runs found");
  return out;
}

/// Statistics over the last `window` sweeps of each run (all of them if a run
/// has fewer), grouped by (mode, xi, metric).
inline std::vector<SummaryRow> summarize(const std::vector<RunSeries>& runs, std::size_t window) {
  if (window == 0) throw ConfigError("report window must be positive");
  struct Acc {
    std::vector<double> samples;
    std::vector<double> seed_means;
  };
  std::map<std::tuple<std::string, double, std::string>, Acc> groups;
  for (const auto& r : runs)
    for (const auto& [metric, vals] : r.values) {
      const std::size_t take = std::min(window, vals.size());
      auto& acc = groups[{r.mode, r.xi, metric}];
      double s = 0.0;
      for (std::size_t i = vals.size() - take; i < vals.size(); ++i) {
        acc.samples.push_back(vals[i]);
        s += vals[i];
      }
      acc.seed_means.push_back(s / static_cast<double>(take));
    }
  auto mean_sd = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    const double sd =
        v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : std::numeric_limits<double>::quiet_NaN();
    return std::pair{m, sd};
  };
  std::vector<SummaryRow> rows;
  for (const auto& [key, acc] : groups) {
    SummaryRow row;
    std::tie(row.mode, row.xi, row.metric) = key;
    const auto [m, sd] = mean_sd(acc.samples);
    row.mean = m;
    row.std = acc.samples.size() > 1 ? sd : 0.0;
    const auto seed_stats = mean_sd(acc.seed_means);
    row.se = seed_stats.second / std::sqrt(static_cast<double>(acc.seed_means.size()));
    row.seeds = acc.seed_means.size();
    row.samples = acc.samples.size();
    rows.push_back(std::move(row));
  }
  return rows;
}

inline const SummaryRow* find_row(const std::vector<SummaryRow>& rows, std::string_view mode, std::string_view metric) {
  for (const auto& r : rows)
    if (r.mode == mode && r.metric == metric) return &r;
  return nullptr;
}

inline void print_table(const std::vector<SummaryRow>& rows, std::ostream& os) {
  os << std::left << std::setw(14) << "mode" << std::setw(7) << "xi" << std::setw(11) << "metric" << std::right
     << std::setw(12) << "mean" << std::setw(12) << "std" << std::setw(12) << "se(seeds)" << std::setw(7) << "seeds"
     << std::setw(9) << "samples" << '\n';
  for (const auto& r : rows) {
    os << std::left << std::setw(14) << r.mode << std::setw(7) << r.xi << std::setw(11) << r.metric << std::right
       << std::fixed << std::setprecision(4) << std::setw(12) << r.mean << std::setw(12) << r.std << std::setw(12)
       << r.se << std::defaultfloat << std::setw(7) << r.seeds << std::setw(9) << r.samples << '\n';
  }
}

inline void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& os) {
  os << "mode,xi,metric,mean,std,se,seeds,samples\n";
  os << std::setprecision(17);
  for (const auto& r : rows)
    os << r.mode << ',' << r.xi << ',' << r.metric << ',' << r.mean << ',' << r.std << ',' << r.se << ',' << r.seeds
       << ',' << r.samples << '\n';
}

/// Long-format series: one row per (run, sweep, metric).
inline void write_series_csv(const std::vector<RunSeries>& runs, std::ostream& os) {
  os << "mode,xi,seed,epoch,metric,value\n";
  os << std::setprecision(17);
  for (const auto& r : runs)
    for (const auto& [metric, vals] : r.values)
      for (std::size_t i = 0; i < vals.size(); ++i)
        os << r.mode << ',' << r.xi << ',' << r.seed << ',' << r.epochs[i] << ',' << metric << ',' << vals[i] << '\n';
}

}  // namespace paada
