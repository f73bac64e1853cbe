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


#ifndef BCEL_ZEROSUM_HPP_
#define BCEL_ZEROSUM_HPP_

#include <vector>

#include "bcel/bcel_q.hpp"
#include "bcel/function_classes.hpp"
#include "bcel/game_model.hpp"
#include "bcel/offline_data.hpp"
#include "bcel/policy_space.hpp"

namespace bcel {

// Max-player payoffs over Pi_max x Pi_min, stored row-major [mu][nu] on the
// game's reward scale (player 0's V in [0, v_max]).
struct PayoffIntervalTable {
  int rows = 0;
  int cols = 0;
  Table exact;
  Table upper;
  Table lower;
  // max |upper - (v_max - lower_2)|, |lower - (v_max - upper_2)| against the
  // min player's own intervals; 0 for tables built from exact values.
  double mirror_error = 0;

  double V(int mu, int nu) const { return exact[idx(mu, nu)]; }
  double Upper(int mu, int nu) const { return upper[idx(mu, nu)]; }
  double Lower(int mu, int nu) const { return lower[idx(mu, nu)]; }
  double Width(int mu, int nu) const { return Upper(mu, nu) - Lower(mu, nu); }

 private:
  std::size_t idx(int mu, int nu) const {
    return static_cast<std::size_t>(mu) * cols + nu;
  }
};

// The product class Pi_max x Pi_min, mu outermost.
PolicyClass zero_sum_class(const MarkovGame& game,
                           const std::vector<PlayerPolicy>& max_policies,
                           const std::vector<PlayerPolicy>& min_policies);

// Intervals from Q-type version spaces of both players. `result`, if given,
// receives the underlying run.
PayoffIntervalTable build_interval_table(
    const MarkovGame& game, const std::vector<PlayerPolicy>& max_policies,
    const std::vector<PlayerPolicy>& min_policies,
    const std::vector<FunctionClass>& classes, const OfflineDataset& data,
    const ThresholdRule& threshold, BcelResult* result = nullptr);

// Degenerate table with upper = lower = exact.
PayoffIntervalTable exact_interval_table(
    const MarkovGame& game, const std::vector<PlayerPolicy>& max_policies,
    const std::vector<PlayerPolicy>& min_policies);

// J(mu, nu) = max_mu' upper(mu', nu) - min_nu' lower(mu, nu').
double objective_J(const PayoffIntervalTable& t, int mu, int nu);
// max_mu' V(mu', nu) - min_nu' V(mu, nu') from the exact entries.
double table_duality_gap(const PayoffIntervalTable& t, int mu, int nu);

struct ZeroSumSelection {
  int mu = 0;
  int nu = 0;
  double objective = 0;  // J(mu, nu)
};

// mu = argmax_mu min_nu' lower, nu = argmin_nu max_mu' upper.
ZeroSumSelection select_independent(const PayoffIntervalTable& t);
// Joint argmin of J over all pairs (row-major, lowest index on ties).
ZeroSumSelection joint_argmin_J(const PayoffIntervalTable& t);
// (min_nu max_mu' upper) - (max_mu min_nu' lower).
double separable_min_J(const PayoffIntervalTable& t);

// Pair with the smallest exact duality gap.
ZeroSumSelection exact_equilibrium(const PayoffIntervalTable& t);

struct PropositionBound {
  double rhs = 0;  // min over (mu~, nu~) of widths plus subopt terms
  int mu_tilde = 0;
  int nu_tilde = 0;
  // Exact duality gap of (mu*, nu*); the bound is rhs + this term, which is
  // zero when the class holds an exact equilibrium.
  double reference_gap = 0;
  double bound() const { return rhs + reference_gap; }
};

PropositionBound proposition_bound(const PayoffIntervalTable& t, int mu_star,
                                   int nu_star);

// sum_i (max_{pi'} V_i^{pi'}(s0) - V_i^pi(s0)) over the product class.
double sum_form_gap(const MarkovGame& game, const PolicyClass& cls,
                    const JointPolicy& pi);

}  // namespace bcel

#endif  // BCEL_ZEROSUM_HPP_
