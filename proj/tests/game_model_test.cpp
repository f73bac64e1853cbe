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

#include <vector>

#include "doctest.h"

namespace bcel {
namespace {

TEST_CASE("joint actions use player 0 as the most significant digit") {
  const JointActionSpace space({3, 2, 4});
  CHECK(space.size() == 24);
  CHECK(space.Encode(std::vector<int>{1, 0, 2}) == 1 * 8 + 0 * 4 + 2);
  for (int a = 0; a < space.size(); ++a) {
    const auto dec = space.Decode(a);
    CHECK(space.Encode(dec) == a);
    for (int i = 0; i < 3; ++i) CHECK(space.ActionOf(a, i) == dec[i]);
  }
  CHECK(space.WithAction(space.Encode(std::vector<int>{2, 1, 3}), 1, 0) ==
        space.Encode(std::vector<int>{2, 0, 3}));
  CHECK(space.Others(1) == std::vector<int>{0, 2});
}

TEST_CASE("projection onto a subset of players") {
  const JointActionSpace space({2, 3});
  const std::vector<int> players = {1};
  const auto [map, size] = space.Projection(players);
  CHECK(size == 3);
  for (int a = 0; a < space.size(); ++a) CHECK(map[a] == space.ActionOf(a, 1));
}

TEST_CASE("example matrix game under both roles") {
  const auto row = build_matrix_game(example_payoff());
  CHECK(row.num_states() == 1);
  CHECK(row.discount() == 0.0);
  const auto& space = row.joint();
  auto at = [&](int a, int b) { return space.Encode(std::vector<int>{a, b}); };
  CHECK(row.reward(0, 0, at(0, 0)) == 0.5);
  CHECK(row.reward(0, 0, at(0, 1)) == 0.75);
  CHECK(row.reward(0, 0, at(1, 0)) == 0.25);
  CHECK(row.reward(0, 0, at(2, 2)) == 0.0);
  CHECK(row.reward(1, 0, at(0, 1)) == 0.25);
  const auto col = build_matrix_game(example_payoff(),
                                     MatrixRole::kColumnMaximizer);
  CHECK(col.reward(1, 0, at(0, 1)) == 0.75);
  CHECK(col.reward(0, 0, at(0, 1)) == 0.25);
  CHECK(is_zero_sum(row));
  CHECK(row.v_max() == 1.0);
}

TEST_CASE("constructor validation") {
  const std::vector<double> ok = {1.0};
  CHECK_THROWS_AS(MarkovGame(1, {1}, {0.9}, {{0.5}}, 0.5, 0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(MarkovGame(1, {1}, ok, {{1.5}}, 0.5, 0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(MarkovGame(1, {1}, ok, {{-0.1}}, 0.5, 0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(MarkovGame(1, {1}, ok, {{0.5}}, 1.0, 0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(MarkovGame(1, {1}, ok, {{0.5}}, 0.5, 1, 1.0),
                  std::invalid_argument);
  CHECK_NOTHROW(MarkovGame(1, {1}, ok, {{0.5}}, 0.5, 0, 1.0));
}

TEST_CASE("random games are reproducible and valid") {
  const auto a = build_random_game(11, 3, 4, {2, 3, 2}, 0.9);
  const auto b = build_random_game(11, 3, 4, {2, 3, 2}, 0.9);
  const auto c = build_random_game(12, 3, 4, {2, 3, 2}, 0.9);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  for (int s = 0; s < a.num_states(); ++s) {
    for (int j = 0; j < a.num_joint_actions(); ++j) {
      double sum = 0.0;
      for (int t = 0; t < a.num_states(); ++t) sum += a.transition(s, j, t);
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  CHECK(a.v_max() == doctest::Approx(10.0));
}

TEST_CASE("zero-sum conversion") {
  const auto g = build_random_game(5, 2, 3, {2, 2}, 0.5);
  CHECK_FALSE(is_zero_sum(g));
  const auto z = make_zero_sum(g);
  CHECK(is_zero_sum(z));
  for (int k = 0; k < z.num_cells(); ++k) {
    CHECK(z.rewards(1)[k] == doctest::Approx(1.0 - z.rewards(0)[k]));
  }
}

TEST_CASE("serialization round trip is exact") {
  const auto g = build_random_game(3, 2, 3, {3, 2}, 0.95);
  const auto text = serialize_game(g);
  const auto back = deserialize_game(text);
  CHECK(back == g);
  CHECK(serialize_game(back) == text);
}

TEST_CASE("malformed game records raise parse errors") {
  CHECK_THROWS_AS(deserialize_game("{not json"), ParseError);
  CHECK_THROWS_AS(deserialize_game(R"({"format":"other"})"), ParseError);
  auto text = serialize_game(build_matrix_game(example_payoff()));
  const auto pos = text.find("\"gamma\":0.0");
  if (pos != std::string::npos) {
    text.replace(pos, 11, "\"gamma\":1.0");
    CHECK_THROWS_AS(deserialize_game(text), ParseError);
  }
}

}  // namespace
}  // namespace bcel
