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

#include "bcel/game_model.hpp"

#include <cmath>
#include <sstream>

#include "bcel/random.hpp"
#include "json.hpp"

namespace bcel {

using nlohmann::json;

JointActionSpace::JointActionSpace(std::vector<int> action_counts)
    : counts_(std::move(action_counts)) {
  if (counts_.empty()) {
    throw std::invalid_argument("JointActionSpace: need at least one player");
  }
  strides_.assign(counts_.size(), 1);
  size_ = 1;
  for (int p = num_players() - 1; p >= 0; --p) {
    if (counts_[p] <= 0) {
      throw std::invalid_argument("JointActionSpace: action counts must be > 0");
    }
    strides_[p] = size_;
    size_ *= counts_[p];
  }
}

int JointActionSpace::Encode(std::span<const int> actions) const {
  if (static_cast<int>(actions.size()) != num_players()) {
    throw std::invalid_argument("Encode: wrong number of actions");
  }
  int joint = 0;
  for (int p = 0; p < num_players(); ++p) {
    if (actions[p] < 0 || actions[p] >= counts_[p]) {
      throw std::out_of_range("Encode: action out of range for player " +
                              std::to_string(p));
    }
    joint += actions[p] * strides_[p];
  }
  return joint;
}

std::vector<int> JointActionSpace::Decode(int joint) const {
  std::vector<int> actions(counts_.size());
  for (int p = 0; p < num_players(); ++p) actions[p] = ActionOf(joint, p);
  return actions;
}

std::pair<std::vector<int>, int> JointActionSpace::Projection(
    std::span<const int> players) const {
  std::vector<int> sub_strides(players.size(), 1);
  int sub_size = 1;
  for (int k = static_cast<int>(players.size()) - 1; k >= 0; --k) {
    sub_strides[k] = sub_size;
    sub_size *= counts_[players[k]];
  }
  std::vector<int> map(size_);
  for (int a = 0; a < size_; ++a) {
    int idx = 0;
    for (std::size_t k = 0; k < players.size(); ++k) {
      idx += ActionOf(a, players[k]) * sub_strides[k];
    }
    map[a] = idx;
  }
  return {std::move(map), sub_size};
}

std::vector<int> JointActionSpace::Others(int player) const {
  std::vector<int> out;
  for (int p = 0; p < num_players(); ++p) {
    if (p != player) out.push_back(p);
  }
  return out;
}

MarkovGame::MarkovGame(int num_states, std::vector<int> action_counts,
                       std::vector<double> transition,
                       std::vector<Table> rewards, double discount,
                       int initial_state, double r_max)
    : num_states_(num_states),
      space_(std::move(action_counts)),
      transition_(std::move(transition)),
      rewards_(std::move(rewards)),
      discount_(discount),
      initial_state_(initial_state),
      r_max_(r_max) {
  if (num_states_ <= 0) throw std::invalid_argument("MarkovGame: S must be > 0");
  if (!(discount_ >= 0.0 && discount_ < 1.0)) {
    throw std::invalid_argument("MarkovGame: discount must lie in [0, 1)");
  }
  if (!(r_max_ > 0.0) || !std::isfinite(r_max_)) {
    throw std::invalid_argument("MarkovGame: r_max must be positive and finite");
  }
  if (initial_state_ < 0 || initial_state_ >= num_states_) {
    throw std::invalid_argument("MarkovGame: initial state out of range");
  }
  const auto cells = static_cast<std::size_t>(num_cells());
  if (transition_.size() != cells * num_states_) {
    throw std::invalid_argument("MarkovGame: transition table has wrong size");
  }
  for (int s = 0; s < num_states_; ++s) {
    for (int a = 0; a < space_.size(); ++a) {
      double total = 0.0;
      for (double p : transition_row(s, a)) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
          throw std::invalid_argument(
              "MarkovGame: negative transition probability at (s=" +
              std::to_string(s) + ", a=" + std::to_string(a) + ")");
        }
        total += p;
      }
      if (std::abs(total - 1.0) > kRowTolerance) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "MarkovGame: transition row (s=" << s << ", a=" << a
            << ") sums to " << total;
        throw std::invalid_argument(msg.str());
      }
    }
  }
  if (static_cast<int>(rewards_.size()) != num_players()) {
    throw std::invalid_argument("MarkovGame: need one reward table per player");
  }
  for (int i = 0; i < num_players(); ++i) {
    if (rewards_[i].size() != cells) {
      throw std::invalid_argument("MarkovGame: reward table has wrong size");
    }
    for (double r : rewards_[i]) {
      if (!(r >= 0.0 && r <= r_max_)) {
        throw std::invalid_argument("MarkovGame: reward outside [0, r_max]");
      }
    }
  }
}

MarkovGame build_matrix_game(const std::vector<std::vector<double>>& payoff,
                             MatrixRole role) {
  if (payoff.empty() || payoff.front().empty()) {
    throw std::invalid_argument("build_matrix_game: empty payoff table");
  }
  const int rows = static_cast<int>(payoff.size());
  const int cols = static_cast<int>(payoff.front().size());
  Table maximizer(static_cast<std::size_t>(rows) * cols);
  Table minimizer(maximizer.size());
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(payoff[r].size()) != cols) {
      throw std::invalid_argument("build_matrix_game: ragged payoff table");
    }
    for (int c = 0; c < cols; ++c) {
      const double v = payoff[r][c];
      if (!(v >= 0.0 && v <= 1.0)) {
        throw std::invalid_argument("build_matrix_game: payoff outside [0, 1]");
      }
      maximizer[r * cols + c] = v;
      minimizer[r * cols + c] = 1.0 - v;
    }
  }
  std::vector<Table> rewards;
  if (role == MatrixRole::kRowMaximizer) {
    rewards = {maximizer, minimizer};
  } else {
    rewards = {minimizer, maximizer};
  }
  std::vector<double> transition(static_cast<std::size_t>(rows) * cols, 1.0);
  return MarkovGame(1, {rows, cols}, std::move(transition), std::move(rewards),
                    0.0, 0, 1.0);
}

std::vector<std::vector<double>> example_payoff() {
  return {{0.5, 0.75, 0.75}, {0.25, 0.0, 0.0}, {0.25, 0.0, 0.0}};
}

MarkovGame build_random_game(std::uint64_t seed, int num_players,
                             int num_states, std::vector<int> action_counts,
                             double discount) {
  if (num_players <= 0 ||
      static_cast<int>(action_counts.size()) != num_players) {
    throw std::invalid_argument(
        "build_random_game: action_counts must list one count per player");
  }
  JointActionSpace space(action_counts);
  Rng rng(seed);
  Rng trans_rng = rng.Derive(0);
  Rng reward_rng = rng.Derive(1);
  std::vector<double> transition;
  transition.reserve(static_cast<std::size_t>(num_states) * space.size() *
                     num_states);
  for (int cell = 0; cell < num_states * space.size(); ++cell) {
    auto row = trans_rng.UniformSimplex(num_states);
    transition.insert(transition.end(), row.begin(), row.end());
  }
  std::vector<Table> rewards(num_players);
  for (auto& table : rewards) {
    table.resize(static_cast<std::size_t>(num_states) * space.size());
    for (auto& r : table) r = reward_rng.Uniform();
  }
  return MarkovGame(num_states, std::move(action_counts), std::move(transition),
                    std::move(rewards), discount, 0, 1.0);
}

MarkovGame make_zero_sum(const MarkovGame& game) {
  if (game.num_players() != 2) {
    throw std::invalid_argument("make_zero_sum: need exactly two players");
  }
  Table mirrored = game.rewards(0);
  for (auto& r : mirrored) r = game.r_max() - r;
  return MarkovGame(game.num_states(), game.joint().action_counts(),
                    game.transitions(), {game.rewards(0), mirrored},
                    game.discount(), game.initial_state(), game.r_max());
}

bool is_zero_sum(const MarkovGame& game, double tol) {
  if (game.num_players() != 2) return false;
  for (std::size_t k = 0; k < game.rewards(0).size(); ++k) {
    if (std::abs(game.rewards(0)[k] + game.rewards(1)[k] - game.r_max()) > tol) {
      return false;
    }
  }
  return true;
}

std::string serialize_game(const MarkovGame& game) {
  json rec;
  rec["format"] = "bcel-game/1";
  rec["m"] = game.num_players();
  rec["S"] = game.num_states();
  rec["action_counts"] = game.joint().action_counts();
  rec["gamma"] = game.discount();
  rec["s0"] = game.initial_state();
  rec["r_max"] = game.r_max();
  rec["transition"] = game.transitions();
  json rewards = json::array();
  for (int i = 0; i < game.num_players(); ++i) rewards.push_back(game.rewards(i));
  rec["rewards"] = std::move(rewards);
  return rec.dump(1) + "\n";
}

namespace {

template <typename T>
T Field(const json& rec, const char* key) {
  if (!rec.contains(key)) throw ParseError(key, "missing field");
  try {
    return rec.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(key, e.what());
  }
}

}  // namespace

MarkovGame deserialize_game(const std::string& record) {
  json rec;
  try {
    rec = json::parse(record);
  } catch (const json::parse_error& e) {
    throw ParseError("byte " + std::to_string(e.byte), e.what());
  }
  if (!rec.is_object()) throw ParseError("<root>", "expected an object");
  if (Field<std::string>(rec, "format") != "bcel-game/1") {
    throw ParseError("format", "unsupported game format");
  }
  const int m = Field<int>(rec, "m");
  auto counts = Field<std::vector<int>>(rec, "action_counts");
  if (static_cast<int>(counts.size()) != m) {
    throw ParseError("action_counts", "expected " + std::to_string(m) +
                                          " entries");
  }
  auto rewards = Field<std::vector<Table>>(rec, "rewards");
  if (static_cast<int>(rewards.size()) != m) {
    throw ParseError("rewards", "expected one table per player");
  }
  try {
    return MarkovGame(Field<int>(rec, "S"), std::move(counts),
                      Field<std::vector<double>>(rec, "transition"),
                      std::move(rewards), Field<double>(rec, "gamma"),
                      Field<int>(rec, "s0"), Field<double>(rec, "r_max"));
  } catch (const std::invalid_argument& e) {
    throw ParseError("<validation>", e.what());
  }
}

}  // namespace bcel
