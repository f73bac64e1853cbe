// Copyright 2026 The BCEL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// bcel: generate instances and datasets, run the estimators, audit the
// bounds, and reproduce the 3x3 matrix example.
//
//   bcel run --config exp.json --out results/
//   BCEL_WORKERS=4 bcel audit --config exp.json --trials 200
//   bcel reproduce-example --trials 100
//
// Exit codes: 0 ok, 1 audit failures beyond delta, 2 usage or I/O error.

#include <cstdio>
#include <optional>
#include <sstream>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bcel/experiment.hpp"
#include "bcel/game_model.hpp"
#include "bcel/offline_data.hpp"
#include "bcel/random.hpp"

namespace {

namespace fs = std::filesystem;
using bcel::ConfigError;

constexpr int kOk = 0;
constexpr int kAuditFailure = 1;
constexpr int kUsageError = 2;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> variant;
  std::optional<std::string> eq;
  std::optional<std::string> threshold_mode;
  std::optional<int> trials;
  std::vector<int> n_grid;
};

void AddFlags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "Experiment config (JSON)");
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--variant", f.variant, "q | v | zerosum");
  cmd->add_option("--eq", f.eq, "ne | cce | ce");
  cmd->add_option("--threshold-mode", f.threshold_mode,
                  "paper | calibrated | override | fixed");
  cmd->add_option("--trials", f.trials, "Trials per n");
  cmd->add_option("--n-grid", f.n_grid, "Sample sizes, e.g. 100,1000")
      ->delimiter(',');
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text) || !out.flush()) {
    throw ConfigError("cannot write " + path.string());
  }
}

bcel::ExperimentConfig Resolve(const Flags& f, bcel::ExperimentConfig base) {
  auto c = f.config.empty() ? base : bcel::parse_config(ReadFile(f.config));
  if (f.seed) c.seed = *f.seed;
  if (f.out) c.out = *f.out;
  if (f.variant) c.variant = bcel::parse_variant(*f.variant);
  if (f.eq) {
    try {
      c.eq = bcel::parse_equilibrium(*f.eq);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("--eq: ") + e.what());
    }
  }
  if (f.threshold_mode) {
    c.threshold_mode = bcel::parse_threshold_mode(*f.threshold_mode);
  }
  if (f.trials) c.trials = *f.trials;
  if (!f.n_grid.empty()) c.n_grid = f.n_grid;
  c.Validate();
  return c;
}

// Writes the instance files into the output directory and returns their
// "name:hash" header entries.
std::vector<std::string> WriteArtifacts(const bcel::ExperimentConfig& c,
                                        const bcel::Instance& inst) {
  fs::create_directories(c.out);
  const std::vector<std::pair<std::string, std::string>> files = {
      {"config.json", bcel::config_to_json(c)},
      {"game.json", bcel::serialize_game(inst.game)},
      {"policy_class.json", bcel::serialize_policy_class(inst.policies)},
      {"distribution.json", bcel::serialize_distribution(inst.distribution)},
  };
  std::vector<std::string> entries;
  for (const auto& [name, text] : files) {
    WriteFile(fs::path(c.out) / name, text);
    entries.push_back(name + ":" + bcel::content_hash(text));
  }
  return entries;
}

int Generate(const bcel::ExperimentConfig& c) {
  const auto inst = bcel::build_instance(c);
  WriteArtifacts(c, inst);
  for (int t = 0; t < c.trials; ++t) {
    for (std::size_t j = 0; j < c.n_grid.size(); ++j) {
      const int n = c.n_grid[j];
      const auto seed = bcel::Rng(c.seed).Derive(t).Derive(j).key();
      const auto data =
          c.data == "exhaustive"
              ? bcel::exhaustive_dataset(inst.game, inst.distribution, n)
              : bcel::sample_dataset(inst.game, inst.distribution, n, seed);
      WriteFile(fs::path(c.out) / ("data_t" + std::to_string(t) + "_n" +
                                   std::to_string(n) + ".txt"),
                bcel::serialize_dataset(data));
    }
  }
  return kOk;
}

int Run(const bcel::ExperimentConfig& c, bool audit) {
  const auto prep = bcel::prepare_experiment(c);
  const auto artifacts = WriteArtifacts(c, prep.instance);
  const auto results =
      bcel::run_trials(prep, audit, bcel::worker_count_from_env());
  WriteFile(fs::path(c.out) / "results.csv",
            bcel::results_csv(prep, results, artifacts));
  if (!audit) return kOk;
  WriteFile(fs::path(c.out) / "audit.csv",
            bcel::audit_csv(prep, results, artifacts));
  const auto s = bcel::summarize_audit(results);
  std::printf("trials %d  sandwich failures %d  check failures %d  errors %d\n",
              s.trials, s.sandwich_failures, s.check_failures, s.errors);
  return s.passed(c.delta) ? kOk : kAuditFailure;
}

bcel::ExperimentConfig ExampleConfig() {
  bcel::ExperimentConfig c;
  c.game.source = "builtin:matrix-example";
  c.distribution.kind = "matrix-example";
  c.distribution.p1 = 0.6;
  c.distribution.p2 = 0.01;
  c.policy_class.kind = "deterministic";
  c.threshold_mode = bcel::ThresholdMode::kCalibrated;
  c.padding = 90;
  c.padding_seed = 1;
  c.n_grid = {100, 1000, 10000, 100000};
  c.trials = 100;
  c.out = "example";
  return c;
}

int ReproduceExample(const bcel::ExperimentConfig& c) {
  const auto prep = bcel::prepare_experiment(c);
  const auto artifacts = WriteArtifacts(c, prep.instance);
  const auto results =
      bcel::run_trials(prep, false, bcel::worker_count_from_env());
  WriteFile(fs::path(c.out) / "results.csv",
            bcel::results_csv(prep, results, artifacts));
  const auto medians = bcel::median_selected_gaps(prep, results);
  std::printf("%10s %12s %12s %14s\n", "n", "threshold", "median gap",
              "picked (a1,b1)");
  for (std::size_t j = 0; j < c.n_grid.size(); ++j) {
    int hits = 0, ok = 0;
    for (const auto& r : results) {
      if (r.n != c.n_grid[j] || !r.ok) continue;
      ++ok;
      hits += r.selected == prep.reference;
    }
    std::printf("%10d %12.4g %12.4g %8d / %d\n", c.n_grid[j],
                prep.thresholds[j], medians[j], hits, ok);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bellman-consistent equilibrium learning experiments"};
  app.require_subcommand(1);
  Flags flags;
  auto* gen = app.add_subcommand("generate", "Write game, class and datasets");
  auto* run = app.add_subcommand("run", "Run trials and write results.csv");
  auto* audit = app.add_subcommand("audit", "Run trials and check the bounds");
  auto* example =
      app.add_subcommand("reproduce-example", "The 3x3 matrix example sweep");
  for (auto* cmd : {gen, run, audit, example}) AddFlags(cmd, flags);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }
  try {
    if (gen->parsed()) return Generate(Resolve(flags, {}));
    if (run->parsed()) return Run(Resolve(flags, {}), false);
    if (audit->parsed()) return Run(Resolve(flags, {}), true);
    return ReproduceExample(Resolve(flags, ExampleConfig()));
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "bcel: %s\n", e.what());
  } catch (const bcel::ParseError& e) {
    std::fprintf(stderr, "bcel: parse error at %s\n", e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "bcel: %s\n", e.what());
  }
  return kUsageError;
}
