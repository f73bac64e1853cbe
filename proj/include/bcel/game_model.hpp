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

#ifndef BCEL_GAME_MODEL_HPP_
#define BCEL_GAME_MODEL_HPP_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bcel {

// Per-(state, joint action) table, row-major with the joint action fastest.
using Table = std::vector<double>;

// Mixed-radix indexing of joint actions. Player 0 is the most significant
// digit, so for two players the joint index is a_0 * |A_1| + a_1 (row-major
// over the payoff matrix).
class JointActionSpace {
 public:
  JointActionSpace() = default;
  explicit JointActionSpace(std::vector<int> action_counts);

  int num_players() const { return static_cast<int>(counts_.size()); }
  int size() const { return size_; }
  int action_count(int player) const { return counts_[player]; }
  const std::vector<int>& action_counts() const { return counts_; }

  int Encode(std::span<const int> actions) const;
  std::vector<int> Decode(int joint) const;
  int ActionOf(int joint, int player) const {
    return (joint / strides_[player]) % counts_[player];
  }
  // Joint index with `player`'s component replaced by `action`.
  int WithAction(int joint, int player, int action) const {
    return joint + (action - ActionOf(joint, player)) * strides_[player];
  }

  // For each joint action, its index in the joint space of `players` (sorted,
  // same mixed-radix convention). The second member is that space's size.
  std::pair<std::vector<int>, int> Projection(
      std::span<const int> players) const;
  // Players other than `player`, in increasing order.
  std::vector<int> Others(int player) const;

  bool operator==(const JointActionSpace&) const = default;

 private:
  std::vector<int> counts_;
  std::vector<int> strides_;
  int size_ = 0;
};

// Finite tabular discounted Markov game with deterministic per-player rewards.
// Immutable after construction; every constructor path validates.
class MarkovGame {
 public:
  static constexpr double kRowTolerance = 1e-12;

  // transition: [s][a][s'] flattened; rewards: one [s][a] table per player.
  MarkovGame(int num_states, std::vector<int> action_counts,
             std::vector<double> transition, std::vector<Table> rewards,
             double discount, int initial_state, double r_max);

  int num_players() const { return space_.num_players(); }
  int num_states() const { return num_states_; }
  int num_joint_actions() const { return space_.size(); }
  // Number of (state, joint action) cells.
  int num_cells() const { return num_states_ * space_.size(); }
  const JointActionSpace& joint() const { return space_; }
  double discount() const { return discount_; }
  int initial_state() const { return initial_state_; }
  double r_max() const { return r_max_; }
  double v_max() const { return r_max_ / (1.0 - discount_); }

  double transition(int s, int a, int s_next) const {
    return transition_[(static_cast<std::size_t>(s) * space_.size() + a) *
                           num_states_ + s_next];
  }
  std::span<const double> transition_row(int s, int a) const {
    return {transition_.data() +
                (static_cast<std::size_t>(s) * space_.size() + a) * num_states_,
            static_cast<std::size_t>(num_states_)};
  }
  const std::vector<double>& transitions() const { return transition_; }
  double reward(int player, int s, int a) const {
    return rewards_[player][static_cast<std::size_t>(s) * space_.size() + a];
  }
  const Table& rewards(int player) const { return rewards_[player]; }

  bool operator==(const MarkovGame&) const = default;

 private:
  int num_states_;
  JointActionSpace space_;
  std::vector<double> transition_;
  std::vector<Table> rewards_;
  double discount_;
  int initial_state_;
  double r_max_;
};

// Which player of a two-player matrix game maximizes the payoff entries.
enum class MatrixRole { kRowMaximizer, kColumnMaximizer };

// One-state, discount-0 two-player game. The maximizer's reward is the payoff
// entry and the other player's reward is 1 - payoff, so both stay in [0, 1].
MarkovGame build_matrix_game(const std::vector<std::vector<double>>& payoff,
                             MatrixRole role = MatrixRole::kRowMaximizer);

// The 3x3 zero-sum example with pure equilibrium (a1, b1).
std::vector<std::vector<double>> example_payoff();

// Transitions uniform on the simplex, rewards uniform in [0, 1], s0 = 0.
MarkovGame build_random_game(std::uint64_t seed, int num_players,
                             int num_states, std::vector<int> action_counts,
                             double discount);

// Two-player zero-sum encoding of `game`: player 0 keeps its rewards and
// player 1 receives r_max - r_0.
MarkovGame make_zero_sum(const MarkovGame& game);
bool is_zero_sum(const MarkovGame& game, double tol = 1e-12);

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& location, const std::string& message)
      : std::runtime_error(location + ": " + message), location_(location) {}
  const std::string& location() const { return location_; }

 private:
  std::string location_;
};

// JSON record {format, m, S, action_counts, gamma, s0, r_max, transition,
// rewards}; doubles are written in shortest round-trip form.
std::string serialize_game(const MarkovGame& game);
// Throws ParseError (with a field path or byte offset) on malformed input and
// on invariant violations.
MarkovGame deserialize_game(const std::string& record);

}  // namespace bcel

#endif  // BCEL_GAME_MODEL_HPP_
