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


#ifndef BCEL_BCEL_V_HPP_
#define BCEL_BCEL_V_HPP_

#include <cstdint>
#include <vector>

#include "bcel/bcel_q.hpp"
#include "bcel/function_classes.hpp"
#include "bcel/game_model.hpp"
#include "bcel/offline_data.hpp"
#include "bcel/policy_space.hpp"

namespace bcel {

// Action importance weights pi(a|s) / d_A(a|s) over the full (s, a) grid.
struct WeightedLossContext {
  int num_states = 0;
  int num_joint_actions = 0;
  Table behavior;  // d_A(a|s); 0 where d_S(s) = 0
  Table weights;   // +inf where pi puts mass and d_A does not
  double c_a = 0;  // max weight, the C_A(pi) constant

  bool bounded() const;
  double weight(int s, int a) const {
    return weights[static_cast<std::size_t>(s) * num_joint_actions + a];
  }
};

WeightedLossContext weighted_loss_context(const DataDistribution& dist,
                                          const JointPolicy& pi);

// (1/n) sum_k w(s_k, a_k) (g'(s_k) - r_i - gamma g(s'_k))^2. Throws if a tuple
// has d_A(a|s) = 0 while pi(a|s) > 0.
double weighted_empirical_loss(const MarkovGame& game,
                               const OfflineDataset& data, int player,
                               const std::vector<double>& g_prime,
                               const std::vector<double>& g,
                               const JointPolicy& pi);

double threshold_beta_g(int n, double class_total, double ext_size,
                        double delta, double v_max, double eps_f, double c_a,
                        double stat_constant = 80.0,
                        double approx_constant = 30.0);

// Same report layout as run_bcel; `classes` must hold V-kind classes and the
// dataset's distribution supplies d_A. Policies with unbounded weights get the
// interval [0, v_max].
BcelResult run_bcel_v(const MarkovGame& game, const ExtendedClass& ext,
                      const std::vector<FunctionClass>& classes,
                      const OfflineDataset& data, const BcelConfig& config);

// Per-policy thresholds actually used by run_bcel_v: [i][ext policy].
std::vector<std::vector<double>> v_thresholds(const MarkovGame& game,
                                              const ExtendedClass& ext,
                                              const std::vector<FunctionClass>&
                                                  classes,
                                              const OfflineDataset& data,
                                              const ThresholdRule& rule);

// (1 - delta) quantile over pilot datasets of max_{i, pi} E_i(V_i^pi, pi)
// under the importance-weighted loss.
double calibrate_threshold_v(const MarkovGame& game, const ExtendedClass& ext,
                             const std::vector<FunctionClass>& classes,
                             const DataDistribution& dist, int n, double delta,
                             int pilots, std::uint64_t seed);

// Population weighted loss E_{s~d_S, a~pi, s'}[(g(s) - r_i - gamma g(s'))^2].
double population_weighted_loss(const MarkovGame& game,
                                const DataDistribution& dist, int player,
                                const std::vector<double>& g,
                                const JointPolicy& pi);

}  // namespace bcel

#endif  // BCEL_BCEL_V_HPP_
