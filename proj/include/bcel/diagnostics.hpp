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


#ifndef BCEL_DIAGNOSTICS_HPP_
#define BCEL_DIAGNOSTICS_HPP_

#include <string>
#include <vector>

#include "bcel/bcel_q.hpp"
#include "bcel/exact_oracle.hpp"
#include "bcel/function_classes.hpp"
#include "bcel/game_model.hpp"
#include "bcel/offline_data.hpp"
#include "bcel/policy_space.hpp"

namespace bcel {

double interval_width(const VersionSpace& vs, const FunctionClass& cls,
                      const JointPolicy& pi, int s0);

// max(uppers) - uppers[member].
double subopt(const std::vector<double>& uppers, int member);

struct PlayerBoundTerms {
  double base_width = 0;                 // Delta_i^pi
  std::vector<double> member_width;      // Delta_i of each response member
  std::vector<double> member_subopt;
  std::vector<double> member_sum;        // width + base width + subopt
  int best_member = 0;                   // argmin of member_sum
  double adaptive = 0;                   // min of member_sum
  double unilateral = 0;                 // max_j (width_j + base width)
};

// Trade-off terms of the composite bound for class member `policy`. Works
// for both Q-type and V-type interval tables.
struct BoundBreakdown {
  int policy = 0;
  std::vector<PlayerBoundTerms> players;
  double adaptive = 0;    // max_i min_j (...)
  double unilateral = 0;  // max_i max_j (...)
};

BoundBreakdown bound_breakdown(const ExtendedClass& ext,
                               const IntervalTable& intervals, int policy);

// True when lower - tol <= V_i^pi(s0) <= upper + tol for every player and
// every extended-class policy.
bool sandwich_event(const MarkovGame& game, const ExtendedClass& ext,
                    const IntervalTable& intervals, double tol = 1e-9);

// Exact equilibrium gaps of the class members (NaN where undefined).
std::vector<double> exact_gaps(const MarkovGame& game, const PolicyClass& cls,
                               Equilibrium eq);

// Number of eligible members with Gap(pi) > estimated gap + tol.
int upper_bound_violations(const std::vector<double>& gaps,
                           const GapReport& report, double tol = 1e-9);

struct TheoremCheck {
  int comparator = 0;
  double selected_gap = 0;    // Gap(pi_hat)
  double comparator_gap = 0;  // Gap(pi)
  double approx_term = 0;     // 4 sqrt(eps_F) / (1 - gamma)
  double adaptive = 0;
  double rhs = 0;
  bool holds = false;
  double slack() const { return rhs - selected_gap; }
};

// Composite bound Gap(pi_hat) <= Gap(pi) + 4 sqrt(eps_F)/(1-gamma) +
// max_i min_j (...), checked for every eligible comparator.
std::vector<TheoremCheck> theorem_checks(const MarkovGame& game,
                                         const ExtendedClass& ext,
                                         const BcelResult& result,
                                         const std::vector<double>& gaps,
                                         double eps_f, double tol = 1e-9);

struct ProbeTerms {
  std::string name;
  double coverage = 0;     // C(d; d_D, F_i, pi)
  double mismatch = 0;     // sqrt(C) eps_apx / (1 - gamma)
  double off_support = 0;  // sum (d^pi \ d)[Df - gamma P Df] / (1 - gamma)
  double rhs = 0;
  // Leading constant of eps_apx for which this probe's rhs equals the width.
  double needed_constant = 0;
};

struct WidthBoundInputs {
  int n = 1;
  double class_total = 1;
  double ext_size = 1;
  double delta = 0.1;
  double eps_f = 0;
  double eps_ff = 0;
  double constant = 1;  // leading constant of eps_apx
  double c_a = 1;       // V classes only
};

struct WidthBound {
  double width = 0;
  double eps_apx = 0;
  std::vector<ProbeTerms> probes;
  int best_probe = 0;
  double rhs = 0;
  double needed_constant = 0;  // min over probes
  bool holds() const { return width <= rhs + 1e-9; }
};

// Probe set d^pi, d_D and alpha d^pi + (1 - alpha) d_D for alpha in
// {0.25, 0.5, 0.75}; over cells for Q classes and states for V classes.
std::vector<std::pair<std::string, Table>> probe_distributions(
    const MarkovGame& game, const JointPolicy& pi, const DataDistribution& dist,
    FunctionKind kind);

// Width bound for one version space. For V classes the transition term uses
// (P g)(s) = E_{a ~ pi, s'}[r_i(s, a) + g(s')].
WidthBound width_bound(const MarkovGame& game, const FunctionClass& cls,
                       const JointPolicy& pi, const VersionSpace& vs,
                       const DataDistribution& dist,
                       const WidthBoundInputs& inputs);

// max_i max_{pi' in response(pi*)} C(d^{pi'}; d_D, F_i, pi*). State
// marginals are used for V classes.
double unilateral_coefficient(const MarkovGame& game, const ExtendedClass& ext,
                              const std::vector<FunctionClass>& classes,
                              const DataDistribution& dist, int policy);

// C(d^{pi}; d_D, F_i, pi) for class member `policy`.
double self_coverage(const MarkovGame& game, const ExtendedClass& ext,
                     const FunctionClass& cls, const DataDistribution& dist,
                     int policy);

// Gap(pi_hat) / (v_max / (1 - gamma) sqrt(C log(class_total ext / delta) / n)).
double unilateral_kappa(double selected_gap, double coefficient, int n,
                        double class_total, double ext_size, double delta,
                        double v_max, double discount);

struct CompletenessGap {
  double eps_pi = 0;            // max_i (unrestricted best - class best)
  double unrestricted_gap = 0;  // gap against unrestricted deviations
  double class_gap = 0;         // gap within the class
};

CompletenessGap strategy_completeness_gap(const MarkovGame& game,
                                          const PolicyClass& cls,
                                          const JointPolicy& pi,
                                          Equilibrium eq);

}  // namespace bcel

#endif  // BCEL_DIAGNOSTICS_HPP_
