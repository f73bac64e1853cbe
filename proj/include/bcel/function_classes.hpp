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

#ifndef BCEL_FUNCTION_CLASSES_HPP_
#define BCEL_FUNCTION_CLASSES_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "bcel/game_model.hpp"
#include "bcel/offline_data.hpp"
#include "bcel/policy_space.hpp"

namespace bcel {

// Q candidates are (state, joint action) tables; V candidates are state
// tables.
enum class FunctionKind { kQ, kV };

inline constexpr std::size_t kDefaultClassCap = 100000;

struct FunctionClass {
  int player = 0;
  FunctionKind kind = FunctionKind::kQ;
  int num_states = 0;
  int num_joint_actions = 0;
  double v_max = 1.0;
  std::vector<Table> candidates;

  int size() const { return static_cast<int>(candidates.size()); }
  std::size_t table_size() const {
    return kind == FunctionKind::kQ
               ? static_cast<std::size_t>(num_states) * num_joint_actions
               : static_cast<std::size_t>(num_states);
  }
  // Checks shape and that entries lie in [0, v_max].
  void Validate() const;
};

// Every table with entries on {0, step, 2 step, ..., v_max}. Throws
// std::length_error when the class would exceed `cap`.
FunctionClass build_grid_class(const MarkovGame& game, int player,
                               FunctionKind kind, double grid_step,
                               std::size_t cap = kDefaultClassCap);

// {Q_i^pi : pi in policies} (or V_i^pi), in order and without merging,
// followed by `padding` perturbed copies: copy j starts from member
// j mod |policies| and has one uniformly chosen entry redrawn uniformly from
// [0, v_max].
FunctionClass build_exact_class(const MarkovGame& game, int player,
                                FunctionKind kind,
                                const std::vector<JointPolicy>& policies,
                                int padding = 0, std::uint64_t seed = 0,
                                std::size_t cap = kDefaultClassCap);

// One class per player built from the player's extended class.
std::vector<FunctionClass> build_exact_classes(const MarkovGame& game,
                                               const ExtendedClass& ext,
                                               FunctionKind kind,
                                               int padding = 0,
                                               std::uint64_t seed = 0);

// Candidate f mapped to its player-2 mirror v_max - f.
FunctionClass mirror_class(const FunctionClass& cls, int player);

// f - T_i^pi f on the candidate's own domain: (s, a) cells for Q, states for
// V (with the state Bellman operator).
Table bellman_residual(const MarkovGame& game, int player,
                       const JointPolicy& pi, const Table& f,
                       FunctionKind kind);
// sum_x d(x) r(x)^2.
double weighted_square(const Table& residual, const Table& d);

// Admissible distributions for player i: d^{pi'} for pi' in the extended
// class followed by d_D (state marginals for V classes).
std::vector<Table> admissible_distributions(const MarkovGame& game,
                                            const ExtendedClass& ext,
                                            int player,
                                            const DataDistribution& dist,
                                            FunctionKind kind);

// max_i max_{pi in ext_i} min_f max_{admissible d} ||f - T_i^pi f||_d^2.
double realizability_error(const MarkovGame& game, const ExtendedClass& ext,
                           const std::vector<FunctionClass>& classes,
                           const DataDistribution& dist);

// max_i max_{pi in ext_i} max_f min_{f'} ||f' - T_i^pi f||_{d_D}^2.
double completeness_error(const MarkovGame& game, const ExtendedClass& ext,
                          const std::vector<FunctionClass>& classes,
                          const DataDistribution& dist);

// max_f ||f - T f||_d^2 / ||f - T f||_{d_D}^2 with 0/0 candidates skipped and
// x/0 = +inf. Floored at 1, the value for d = d_D. `d` and `data` are over
// cells for Q classes and over states for V classes.
double coverage_coefficient(const MarkovGame& game, const JointPolicy& pi,
                            const FunctionClass& cls, const Table& d,
                            const Table& data);

std::string serialize_function_class(const FunctionClass& cls);
FunctionClass deserialize_function_class(const std::string& text);

}  // namespace bcel

#endif  // BCEL_FUNCTION_CLASSES_HPP_
