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

#ifndef BCEL_OFFLINE_DATA_HPP_
#define BCEL_OFFLINE_DATA_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bcel/game_model.hpp"

namespace bcel {

// Data distribution d_D over (state, joint action) cells, with its state
// marginal d_S and behavior conditional d_A(.|s) = d_D(s, .) / d_S(s).
// d_A is undefined at states with d_S(s) = 0.
class DataDistribution {
 public:
  DataDistribution(int num_states, int num_joint_actions, Table table);

  static DataDistribution Uniform(const MarkovGame& game);
  static DataDistribution PointMass(const MarkovGame& game, int s, int a);
  // Full-support draw from the uniform distribution on the simplex.
  static DataDistribution Random(const MarkovGame& game, std::uint64_t seed);
  // The 3x3 example layout: p1 at (a1, b1), p2 on the rest of the first row
  // and column, p3 = (1 - p1 - 4 p2) / 4 elsewhere.
  static DataDistribution MatrixExample(double p1, double p2);

  int num_states() const { return num_states_; }
  int num_joint_actions() const { return num_joint_; }
  const Table& table() const { return table_; }
  double operator()(int s, int a) const {
    return table_[static_cast<std::size_t>(s) * num_joint_ + a];
  }
  const std::vector<double>& state_marginal() const { return d_s_; }
  bool behavior_defined(int s) const { return d_s_[s] > 0.0; }
  // d_A(a|s); nullopt where d_S(s) = 0.
  std::optional<double> behavior(int s, int a) const;

  bool operator==(const DataDistribution&) const = default;

 private:
  int num_states_;
  int num_joint_;
  Table table_;
  std::vector<double> d_s_;
};

// n tuples (s, a, r_1..r_m, s') stored column-wise.
class OfflineDataset {
 public:
  OfflineDataset(const MarkovGame& game, DataDistribution dist,
                 std::uint64_t seed);

  int size() const { return static_cast<int>(states_.size()); }
  int num_players() const { return num_players_; }
  int num_states() const { return num_states_; }
  const JointActionSpace& joint() const { return space_; }
  const DataDistribution& distribution() const { return dist_; }
  std::uint64_t seed() const { return seed_; }

  int state(int k) const { return states_[k]; }
  int action(int k) const { return actions_[k]; }
  int next_state(int k) const { return next_states_[k]; }
  double reward(int k, int player) const {
    return rewards_[static_cast<std::size_t>(k) * num_players_ + player];
  }

  void Append(int s, int a, std::span<const double> rewards, int s_next);

  bool operator==(const OfflineDataset&) const = default;

 private:
  int num_players_;
  int num_states_;
  JointActionSpace space_;
  DataDistribution dist_;
  std::uint64_t seed_;
  std::vector<int> states_;
  std::vector<int> actions_;
  std::vector<int> next_states_;
  std::vector<double> rewards_;
};

// n i.i.d. tuples: (s, a) ~ d_D, rewards from the game, s' ~ P(.|s, a).
// A pure function of (game, dist, n, seed).
OfflineDataset sample_dataset(const MarkovGame& game,
                              const DataDistribution& dist, int n,
                              std::uint64_t seed);

// Deterministic dataset whose empirical distribution equals d_D exactly:
// cell c appears copies * d_D(c) times (must be integral) and its successor
// states follow the stratified quantiles of P(.|c).
OfflineDataset exhaustive_dataset(const MarkovGame& game,
                                  const DataDistribution& dist, int copies);

// Counts / n over (state, joint action).
Table empirical_distribution(const OfflineDataset& data);

// Per-(s, a, s') sufficient statistics of a dataset: tuple counts and, for
// every player, the sum and sum of squares of observed rewards.
struct TransitionStatistics {
  int n = 0;
  int num_states = 0;
  int num_joint_actions = 0;
  int num_players = 0;
  std::vector<double> count;       // [s][a][s']
  std::vector<double> reward_sum;  // [i][s][a][s']
  std::vector<double> reward_sq;   // [i][s][a][s']
  // (s, a) cells that occur in the data, in increasing order.
  std::vector<int> observed_cells;

  explicit TransitionStatistics(const OfflineDataset& data);
  std::size_t index(int s, int a, int t) const {
    return (static_cast<std::size_t>(s) * num_joint_actions + a) * num_states +
           t;
  }
  std::size_t player_offset(int i) const {
    return static_cast<std::size_t>(i) * count.size();
  }
};

// Text format: '#' header lines carry the format tag, n, seed, shape and the
// distribution table; then one tuple per line:
//   s a_1 .. a_m r_1 .. r_m s'
std::string serialize_dataset(const OfflineDataset& data);
// The game supplies reward consistency checks and the shape.
OfflineDataset deserialize_dataset(const MarkovGame& game,
                                   const std::string& text);

}  // namespace bcel

#endif  // BCEL_OFFLINE_DATA_HPP_
