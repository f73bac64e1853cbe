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

#ifndef BCEL_EXPERIMENT_HPP_
#define BCEL_EXPERIMENT_HPP_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bcel/bcel_q.hpp"
#include "bcel/diagnostics.hpp"
#include "bcel/function_classes.hpp"
#include "bcel/game_model.hpp"
#include "bcel/offline_data.hpp"
#include "bcel/policy_space.hpp"
#include "bcel/zerosum.hpp"

namespace bcel {

// Bad configuration or command-line input (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Variant { kQ, kV, kZeroSum };

std::string to_string(Variant v);
Variant parse_variant(const std::string& name);
std::string to_string(ThresholdMode mode);
ThresholdMode parse_threshold_mode(const std::string& name);

struct GameSpec {
  // "builtin:matrix-example", "random", or a path to a game file.
  std::string source = "builtin:matrix-example";
  std::uint64_t seed = 0;
  int players = 2;
  int states = 2;
  std::vector<int> actions = {2, 2};
  double discount = 0.5;
  bool zero_sum = false;
};

struct DistributionSpec {
  // "uniform", "matrix-example", "random" or "file".
  std::string kind = "uniform";
  double p1 = 0.6;
  double p2 = 0.01;
  std::uint64_t seed = 0;
  std::string path;
};

struct ClassSpec {
  // "deterministic": every deterministic stationary profile, as a product.
  // "random-products": per_player random stationary policies per player.
  // "file": a policy-class file.
  std::string kind = "deterministic";
  int per_player = 3;
  std::uint64_t seed = 0;
  std::string path;
};

struct ExperimentConfig {
  GameSpec game;
  DistributionSpec distribution;
  ClassSpec policy_class;
  Equilibrium eq = Equilibrium::kNE;
  Variant variant = Variant::kQ;
  std::vector<int> n_grid = {1000};
  int trials = 1;
  double delta = 0.1;
  ThresholdMode threshold_mode = ThresholdMode::kPaper;
  double threshold_value = 0.0;  // kFixed
  double stat_constant = 80.0;   // kOverride
  double approx_constant = 30.0;
  int pilots = 50;               // kCalibrated
  // Extra perturbed candidates per function class and their seed.
  int padding = 0;
  std::uint64_t padding_seed = 0;
  double eps_f = 0.0;
  // Leading constant of eps_apx in the width audit.
  double width_constant = 1.0;
  // "sample" or "exhaustive" (copies = n, d_D must make counts integral).
  std::string data = "sample";
  std::uint64_t seed = 0;
  std::string out = "out";

  // Throws ConfigError.
  void Validate() const;
};

ExperimentConfig parse_config(const std::string& json_text);
std::string config_to_json(const ExperimentConfig& config);

// Game, behaviour distribution, policy class and (for product classes) the
// per-player lists it was built from.
struct Instance {
  MarkovGame game;
  DataDistribution distribution;
  PolicyClass policies;
  std::vector<std::vector<PlayerPolicy>> lists;
};

// Throws ConfigError for inconsistent specs and ParseError for bad files.
Instance build_instance(const ExperimentConfig& config);

// JSON record {format, m, S, action_counts, policies}; each policy is stored
// by its per-player factors when it is a product and by its joint table
// otherwise.
std::string serialize_policy_class(const PolicyClass& cls);
PolicyClass deserialize_policy_class(const std::string& text);
std::string serialize_distribution(const DataDistribution& dist);
DataDistribution deserialize_distribution(const std::string& text);

// 64-bit FNV-1a, printed as 16 hex digits.
std::string content_hash(const std::string& bytes);
// Shortest round-trip decimal form.
std::string format_double(double x);

// One audit line: lhs <= rhs is checked unless the row is informational.
struct AuditRow {
  std::string check;
  std::string subject;
  double lhs = 0;
  double rhs = 0;
  bool holds = true;
  bool informational = false;
  std::string note;
};

struct PolicyRow {
  int policy = 0;
  bool eligible = false;
  double estimated_gap = 0;
  double true_gap = 0;
  std::vector<double> upper;            // [i], base policy
  std::vector<double> lower;            // [i]
  std::vector<double> deviation_upper;  // [i], max over the response class
  double adaptive = 0;
  double unilateral = 0;
};

struct TrialResult {
  int trial = 0;
  int n = 0;
  std::uint64_t data_seed = 0;
  bool ok = true;
  std::string message;
  double threshold = 0;
  bool sandwich = false;
  int selected = -1;
  double selected_gap = 0;  // exact gap of the selection
  std::vector<PolicyRow> rows;
  // Zero-sum variant.
  std::optional<PayoffIntervalTable> table;
  ZeroSumSelection zs_selection;
  PropositionBound zs_bound;
  std::vector<AuditRow> audits;
};

// Data-independent quantities shared by all trials.
struct PreparedExperiment {
  ExperimentConfig config;
  Instance instance;
  ExtendedClass ext;
  std::vector<FunctionClass> classes;
  std::vector<double> exact_gaps;  // NaN where undefined
  // Exact V_i(s0) of each extended-class policy, [i][k].
  std::vector<std::vector<double>> values;
  int reference = 0;          // class member with the smallest exact gap
  double unilateral_coef = 0;  // C(pi*) for the reference member
  std::vector<double> thresholds;  // per n-grid entry (kFixed/kCalibrated)
};

PreparedExperiment prepare_experiment(const ExperimentConfig& config);

// Runs trial `trial` at n_grid[n_index]. Never throws: failures are recorded
// in the result.
TrialResult run_trial(const PreparedExperiment& prep, int trial, int n_index,
                      bool with_audit);

// All (trial, n) pairs on `workers` threads, returned in trial-major order.
std::vector<TrialResult> run_trials(const PreparedExperiment& prep,
                                    bool with_audit, int workers);

// Worker count from BCEL_WORKERS (default: hardware concurrency, at least 1).
int worker_count_from_env();

// Median exact gap of the selections at each n-grid entry (failed trials
// skipped).
std::vector<double> median_selected_gaps(const PreparedExperiment& prep,
                                         const std::vector<TrialResult>& r);

// Text of the run and audit tables; `artifacts` lists "name:hash" entries
// placed in the header.
std::string results_csv(const PreparedExperiment& prep,
                        const std::vector<TrialResult>& results,
                        const std::vector<std::string>& artifacts);
std::string audit_csv(const PreparedExperiment& prep,
                      const std::vector<TrialResult>& results,
                      const std::vector<std::string>& artifacts);

struct AuditSummary {
  int trials = 0;
  int sandwich_failures = 0;
  int check_failures = 0;  // non-informational failures on sandwich trials
  int errors = 0;          // trials that aborted
  bool passed(double delta) const {
    return check_failures == 0 && errors == 0 &&
           sandwich_failures <= delta * trials;
  }
};

AuditSummary summarize_audit(const std::vector<TrialResult>& results);

}  // namespace bcel

#endif  // BCEL_EXPERIMENT_HPP_
