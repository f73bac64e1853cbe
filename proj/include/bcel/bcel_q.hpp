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

#ifndef BCEL_BCEL_Q_HPP_
#define BCEL_BCEL_Q_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include "bcel/function_classes.hpp"
#include "bcel/game_model.hpp"
#include "bcel/offline_data.hpp"
#include "bcel/policy_space.hpp"

namespace bcel {

// L_i(f', f, pi; D) = (1/n) sum (f'(s,a) - r_i - gamma f(s', pi))^2, computed
// tuple by tuple.
double empirical_loss(const MarkovGame& game, const OfflineDataset& data,
                      int player, const Table& f_prime, const Table& f,
                      const JointPolicy& pi);

// Squared-loss evaluation from per-(s, a, s') sufficient statistics. For a
// fixed target function f, L(f', f) is a quadratic in f' on each observed
// cell, so the whole class is scored in O(|class| * cells).
class EmpiricalBellman {
 public:
  EmpiricalBellman(const MarkovGame& game, const OfflineDataset& data);

  // L(f', f, pi) for every f' in `cls`. For Q classes the continuation is
  // f(s', pi); for V classes it is g(s') and predictions are g'(s).
  // `cell_weights`, when given, multiplies each (s, a) cell's squared
  // residuals (the importance weights of the V-type loss).
  std::vector<double> losses(int player, const Table& f, const JointPolicy& pi,
                             const FunctionClass& cls,
                             const std::vector<double>* cell_weights =
                                 nullptr) const;

  // E_i(f, pi) = L(f, f, pi) - min_{f' in cls} L(f', f, pi), clamped at 0.
  double bellman_error(int player, const Table& f, const JointPolicy& pi,
                       const FunctionClass& cls,
                       const std::vector<double>* cell_weights = nullptr) const;

  // E_i(f, pi) for every candidate of `cls`.
  std::vector<double> bellman_errors(int player, const JointPolicy& pi,
                                     const FunctionClass& cls,
                                     const std::vector<double>* cell_weights =
                                         nullptr) const;

  const TransitionStatistics& statistics() const { return stats_; }

 private:
  struct CellMoments {
    int cell;
    double weight;  // sum of tuple weights
    double first;   // sum of weight * target
    double second;  // sum of weight * target^2
  };
  std::vector<CellMoments> Moments(int player, const std::vector<double>& next,
                                   const std::vector<double>* weights) const;
  double Loss(const std::vector<CellMoments>& moments, const Table& pred,
              FunctionKind kind) const;

  double discount_;
  TransitionStatistics stats_;
};

// E_i(f, pi; D) computed from the tuple-level losses: L(f, f) minus the
// minimum over the class.
double empirical_bellman_error(const MarkovGame& game,
                               const OfflineDataset& data, int player,
                               const Table& f, const JointPolicy& pi,
                               const FunctionClass& cls);

// Comparison slack for E(f) <= eps, relative to v_max^2. E is a difference of
// O(v_max^2) sums, so values below this are round-off.
inline constexpr double kBellmanErrorSlack = 1e-13;

enum class ThresholdMode { kPaper, kOverride, kCalibrated, kFixed };

// How the version-space threshold is chosen.
struct ThresholdRule {
  ThresholdMode mode = ThresholdMode::kPaper;
  double delta = 0.1;
  // Leading constants of the statistical and approximation terms. kPaper
  // always uses 80 and 30; kOverride uses these.
  double stat_constant = 80.0;
  double approx_constant = 30.0;
  // Realizability error fed into the approximation term.
  double eps_f = 0.0;
  // Threshold used verbatim by kFixed and kCalibrated.
  double value = 0.0;
};

// c_stat * w * v_max^2 * log(class_total * ext_size / delta) / n
//   + c_approx * eps_f, with w = 1 for the Q-type threshold.
double threshold_epsilon_v(int n, double class_total, double ext_size,
                           double delta, double v_max, double eps_f,
                           double stat_constant = 80.0,
                           double approx_constant = 30.0);

// Resolves a rule to a number; `weight_bound` is C_A(pi) for V-type.
double resolve_threshold(const ThresholdRule& rule, int n, double class_total,
                         double ext_size, double v_max,
                         double weight_bound = 1.0);

struct VersionSpace {
  int player = 0;
  int policy = 0;          // index into the player's extended class
  double threshold = 0;    // requested threshold
  double effective = 0;    // max(threshold, min_f E(f))
  std::vector<int> members;
  std::vector<double> errors;  // E(f) for every candidate
};

// {f : E(f) <= eps}. When no candidate meets eps, the minimizers of E are
// kept, so the space is never empty.
VersionSpace build_version_space(int player, int policy,
                                 std::vector<double> errors, double eps);

struct Evaluation {
  double value = 0;
  int candidate = 0;  // achieving candidate (lowest index on ties)
};

// max / min over the version space of f(s0, pi) (Q classes) or g(s0)
// (V classes). Throws std::logic_error on an empty space.
Evaluation optimistic_value(const VersionSpace& vs, const FunctionClass& cls,
                            const JointPolicy& pi, int s0);
Evaluation pessimistic_value(const VersionSpace& vs, const FunctionClass& cls,
                             const JointPolicy& pi, int s0);

// Optimistic / pessimistic evaluation of one extended-class policy.
struct PolicyInterval {
  double upper = 0;
  double lower = 0;
  int upper_candidate = -1;
  int lower_candidate = -1;
  int version_space_size = 0;
  double threshold = 0;
  // V-type only: the importance weights are unbounded for this policy.
  bool unbounded = false;
  double width() const { return upper - lower; }
};

// intervals[i][k]: player i, extended-class policy k.
using IntervalTable = std::vector<std::vector<PolicyInterval>>;

struct PolicyGapEntry {
  int policy = 0;
  bool eligible = false;  // has a response class under the equilibrium kind
  double estimated_gap = 0;
  int argmax_player = 0;
  int argmax_member = 0;  // index into the response class of argmax_player
  std::vector<std::vector<double>> deviation_upper;  // [i][member]
  std::vector<double> lower;                         // [i]
};

struct GapReport {
  std::vector<PolicyGapEntry> entries;
  int selected = -1;
  // Class indices whose estimated gap ties the minimum.
  std::vector<int> ties;
};

// Estimated gap of every class member from the intervals:
// max_i max_{dev} upper_i(dev) - lower_i(pi). The selection is the lowest
// index among eligible minimizers; throws if no member is eligible.
GapReport assemble_gap_report(const ExtendedClass& ext,
                              const IntervalTable& intervals);

struct BcelConfig {
  Equilibrium eq = Equilibrium::kNE;
  ThresholdRule threshold;
};

struct BcelResult {
  IntervalTable intervals;
  GapReport report;
  std::vector<std::vector<VersionSpace>> spaces;  // [i][ext policy]
  double threshold = 0;                           // resolved epsilon_v
  int selected() const { return report.selected; }
};

// Version spaces and intervals for every (player, extended-class policy).
// Spaces are built once per (i, pi) and shared by all base policies.
BcelResult run_bcel(const MarkovGame& game, const ExtendedClass& ext,
                    const std::vector<FunctionClass>& classes,
                    const OfflineDataset& data, const BcelConfig& config);

// Estimated gap of a single member of `cls` and its decomposition.
PolicyGapEntry estimated_gap(const BcelResult& result, int policy);

double total_class_size(const std::vector<FunctionClass>& classes);

// The (1 - delta) empirical quantile, over `pilots` datasets of size n, of
// max_{i, pi in ext_i} E_i(Q_i^pi, pi; D).
double calibrate_threshold(const MarkovGame& game, const ExtendedClass& ext,
                           const std::vector<FunctionClass>& classes,
                           const DataDistribution& dist, int n, double delta,
                           int pilots, std::uint64_t seed);

// Exact Q_i^pi for every extended-class policy, [i][k].
std::vector<std::vector<Table>> exact_q_tables(const MarkovGame& game,
                                               const ExtendedClass& ext);

}  // namespace bcel

#endif  // BCEL_BCEL_Q_HPP_
