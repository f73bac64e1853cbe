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

#ifndef BCEL_EXACT_ORACLE_HPP_
#define BCEL_EXACT_ORACLE_HPP_

#include <vector>

#include "bcel/game_model.hpp"
#include "bcel/policy_space.hpp"

namespace bcel {

// f(s, pi) = sum_a pi(a|s) f(s, a).
double value_at(const Table& f, const JointPolicy& pi, int s);
std::vector<double> state_values(const Table& f, const JointPolicy& pi);

// (P^pi f)(s, a) = E_{s' ~ P(.|s,a)} f(s', pi).
Table expected_next_value(const MarkovGame& game, const JointPolicy& pi,
                          const Table& f);

// (T_i^pi f)(s, a) = r_i(s, a) + gamma * (P^pi f)(s, a).
Table bellman_apply(const MarkovGame& game, int player, const JointPolicy& pi,
                    const Table& f);

// State-value analogue used by the V-type variant:
// (T_i^pi g)(s) = sum_a pi(a|s) [r_i(s, a) + gamma * E_{s'} g(s')].
std::vector<double> bellman_apply_state(const MarkovGame& game, int player,
                                        const JointPolicy& pi,
                                        const std::vector<double>& g);

struct PolicyEvaluation {
  Table q;                    // Q_i^pi
  std::vector<double> v;      // V_i^pi(s) = Q_i^pi(s, pi)
  double initial_value = 0;   // V_i^pi(s0)
  bool used_fallback = false; // value iteration replaced the linear solve
};

// Solves (I - gamma P^pi) q = r_i on the (s, a) space by LU; falls back to
// value iteration if the solve is not accurate to 1e-9.
PolicyEvaluation evaluate_policy(const MarkovGame& game, int player,
                                 const JointPolicy& pi);
// Value iteration on Q until successive iterates differ by at most `tol`.
PolicyEvaluation evaluate_policy_iterative(const MarkovGame& game, int player,
                                           const JointPolicy& pi,
                                           double tol = 1e-12);

// Normalized discounted state-action occupancy from s0. Sums to one.
Table occupancy(const MarkovGame& game, const JointPolicy& pi);
// d(s) = sum_a d(s, a).
std::vector<double> state_marginal(const Table& d, int num_states);

struct PlayerDeviation {
  std::vector<double> member_values;  // V_i^{pi_dev}(s0) per response member
  int best_member = 0;                // lowest index attaining the max
  double best_value = 0;
  double base_value = 0;              // V_i^pi(s0)
  double gain() const { return best_value - base_value; }
};

struct GapResult {
  std::vector<PlayerDeviation> players;
  double gap = 0;
  int argmax_player = 0;
};

// Exact in-class gap: max_i max_{dev in response class} V_i^dev(s0) -
// V_i^pi(s0), by enumeration.
GapResult true_gap(const MarkovGame& game, const PolicyClass& cls,
                   const JointPolicy& pi, Equilibrium eq);

struct BestResponse {
  double value = 0;           // exact V_i(s0) of the returned response
  JointPolicy policy;         // the deviation joint policy
  // NE/CCE: one own action per state. CE: one own action per (s, a_i).
  std::vector<int> choice;
};

// Optimal stationary response of `player` to the other players' marginal
// under `pi` (an MDP over the player's own actions), solved by value
// iteration and then evaluated exactly.
BestResponse unrestricted_best_response(const MarkovGame& game, int player,
                                        const JointPolicy& pi);
// Optimal deterministic strategy modification of `player` against `pi`.
BestResponse unrestricted_modification_response(const MarkovGame& game,
                                                int player,
                                                const JointPolicy& pi);

// Zero-sum encoded game (player 1 reward = r_max - player 0 reward).
// V^{mu,nu} is player 0's value at s0.
double zero_sum_value(const MarkovGame& game, const PlayerPolicy& mu,
                      const PlayerPolicy& nu);
// max_{mu'} V^{mu',nu} - min_{nu'} V^{mu,nu'} over the given lists.
double duality_gap(const MarkovGame& game,
                   const std::vector<PlayerPolicy>& max_policies,
                   const std::vector<PlayerPolicy>& min_policies,
                   const PlayerPolicy& mu, const PlayerPolicy& nu);

}  // namespace bcel

#endif  // BCEL_EXACT_ORACLE_HPP_
