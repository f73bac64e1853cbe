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

#ifndef BCEL_POLICY_SPACE_HPP_
#define BCEL_POLICY_SPACE_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bcel/game_model.hpp"

namespace bcel {

enum class Equilibrium { kNE, kCE, kCCE };

std::string to_string(Equilibrium eq);
Equilibrium parse_equilibrium(const std::string& name);

inline constexpr double kPolicyTolerance = 1e-12;

// Stationary policy of a single player: per-state distribution over its own
// actions, stored [s][a_i].
struct PlayerPolicy {
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> probs;

  double prob(int s, int a) const {
    return probs[static_cast<std::size_t>(s) * num_actions + a];
  }
  static PlayerPolicy Deterministic(int num_actions,
                                    const std::vector<int>& action_per_state);
  static PlayerPolicy Uniform(int num_states, int num_actions);
  bool ApproxEqual(const PlayerPolicy& other,
                   double tol = kPolicyTolerance) const;
};

// Stationary joint policy: per-state distribution over joint actions. Product
// policies additionally keep their per-player factors.
class JointPolicy {
 public:
  JointPolicy() = default;
  static JointPolicy Product(const JointActionSpace& space,
                             std::vector<PlayerPolicy> marginals);
  // `probs` is [s][a] over joint actions; validated to be a distribution.
  static JointPolicy Correlated(const JointActionSpace& space, int num_states,
                                std::vector<double> probs);
  // Pure profile: the same joint action in every state.
  static JointPolicy Pure(const JointActionSpace& space, int num_states,
                          const std::vector<int>& actions);

  int num_states() const { return num_states_; }
  int num_joint_actions() const { return space_.size(); }
  const JointActionSpace& space() const { return space_; }
  bool is_product() const { return !marginals_.empty(); }
  // Per-player factors; empty unless is_product().
  const std::vector<PlayerPolicy>& marginals() const { return marginals_; }

  double prob(int s, int a) const {
    return probs_[static_cast<std::size_t>(s) * space_.size() + a];
  }
  std::span<const double> at(int s) const {
    return {probs_.data() + static_cast<std::size_t>(s) * space_.size(),
            static_cast<std::size_t>(space_.size())};
  }
  const std::vector<double>& table() const { return probs_; }

  // Compares the joint distribution tables only.
  bool ApproxEqual(const JointPolicy& other,
                   double tol = kPolicyTolerance) const;

 private:
  JointPolicy(JointActionSpace space, int num_states, std::vector<double> probs,
              std::vector<PlayerPolicy> marginals);

  JointActionSpace space_;
  int num_states_ = 0;
  std::vector<double> probs_;
  std::vector<PlayerPolicy> marginals_;
};

// Deterministic strategy modification of one player: (s, own action) -> own
// action.
struct StrategyModification {
  int player = 0;
  int num_states = 0;
  int num_actions = 0;
  std::vector<int> map;

  int operator()(int s, int a) const {
    return map[static_cast<std::size_t>(s) * num_actions + a];
  }
  static StrategyModification Identity(int player, int num_states,
                                       int num_actions);
  // Identity except that `from` is replaced by `to` at state `s`.
  static StrategyModification Swap(int player, int num_states, int num_actions,
                                   int s, int from, int to);
};

// Finite policy class together with the per-player deviation lists used by
// the response-class mappings.
struct PolicyClass {
  std::vector<JointPolicy> policies;
  // Per player: deviation policies (the marginals of `policies`, deduplicated
  // in order of first appearance, unless supplied explicitly).
  std::vector<std::vector<PlayerPolicy>> deviations;
  // Per player: strategy modifications used for CE.
  std::vector<std::vector<StrategyModification>> modifications;

  // Derives `deviations` from the marginals and uses the identity plus every
  // single-state swap a -> b as the modification set.
  static PolicyClass FromPolicies(std::vector<JointPolicy> policies);
  // Every product of the given per-player lists, player 0 outermost.
  static PolicyClass ProductOf(const JointActionSpace& space,
                               const std::vector<std::vector<PlayerPolicy>>&
                                   per_player);
  int size() const { return static_cast<int>(policies.size()); }
};

struct ResponseClass {
  int player = 0;
  Equilibrium kind = Equilibrium::kNE;
  std::vector<JointPolicy> members;
};

// Distribution over the joint actions of `players` (sorted), stored
// [s][sub-joint] in the mixed-radix order of JointActionSpace::Projection.
std::vector<double> marginalize(const JointPolicy& policy,
                                std::span<const int> players);
PlayerPolicy player_marginal(const JointPolicy& policy, int player);

// Push-forward of `policy` under `phi`: everyone samples a ~ policy(.|s) and
// player phi.player then replaces its own action a_i with phi(s, a_i).
JointPolicy apply_modification(const JointPolicy& policy,
                               const StrategyModification& phi);

// pi_dev x pi_{-i}, where pi_{-i} is the (possibly correlated) marginal of the
// other players under `policy`.
JointPolicy replace_player(const JointPolicy& policy, int player,
                           const PlayerPolicy& deviation);

// Deviation policies of `player` from `policy`. NE requires a product policy
// and throws std::invalid_argument otherwise. Duplicates are kept.
ResponseClass response_class(const JointPolicy& policy, int player,
                             Equilibrium eq, const PolicyClass& cls);

// Per-player extended classes: the union of the response classes of every
// member of the class, together with the class itself, with duplicates (up to
// kPolicyTolerance) merged.
struct ExtendedClass {
  Equilibrium kind = Equilibrium::kNE;
  struct PerPlayer {
    std::vector<JointPolicy> policies;
    // Index of class member k in `policies`.
    std::vector<int> base_index;
    // response_index[k][j]: index of the j-th response-class member of class
    // member k. Empty when the response class is undefined (NE, non-product).
    std::vector<std::vector<int>> response_index;
    // Index of each entry of `policies` in ExtendedClass::all.
    std::vector<int> global_index;
  };
  std::vector<PerPlayer> players;
  // Union over players with duplicates merged.
  std::vector<JointPolicy> all;

  int num_players() const { return static_cast<int>(players.size()); }
  // Whether class member k has a response class under `kind`.
  bool has_response(int k) const {
    return !players.front().response_index[k].empty();
  }
};

ExtendedClass extended_class(const PolicyClass& cls, Equilibrium eq);

}  // namespace bcel

#endif  // BCEL_POLICY_SPACE_HPP_
