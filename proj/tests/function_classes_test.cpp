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

#include "bcel/function_classes.hpp"

#include <cmath>
#include <vector>

#include "bcel/exact_oracle.hpp"
#include "bcel/game_model.hpp"
#include "bcel/offline_data.hpp"
#include "bcel/policy_space.hpp"
#include "doctest.h"

namespace bcel {
namespace {

PolicyClass PureProfiles(const MarkovGame& game) {
  std::vector<PlayerPolicy> rows, cols;
  for (int a = 0; a < game.joint().action_count(0); ++a) {
    rows.push_back(PlayerPolicy::Deterministic(
        game.joint().action_count(0), std::vector<int>(game.num_states(), a)));
  }
  for (int b = 0; b < game.joint().action_count(1); ++b) {
    cols.push_back(PlayerPolicy::Deterministic(
        game.joint().action_count(1), std::vector<int>(game.num_states(), b)));
  }
  return PolicyClass::ProductOf(game.joint(), {rows, cols});
}

FunctionClass Constant(const MarkovGame& game, int player, double value) {
  FunctionClass cls;
  cls.player = player;
  cls.num_states = game.num_states();
  cls.num_joint_actions = game.num_joint_actions();
  cls.v_max = game.v_max();
  cls.candidates.push_back(Table(game.num_cells(), value));
  return cls;
}

TEST_CASE("exact classes are realizable") {
  const auto game = build_random_game(3, 2, 2, {2, 2}, 0.9);
  const auto ext = extended_class(PureProfiles(game), Equilibrium::kNE);
  const auto dist = DataDistribution::Random(game, 4);
  for (auto kind : {FunctionKind::kQ, FunctionKind::kV}) {
    const auto classes = build_exact_classes(game, ext, kind);
    CHECK(realizability_error(game, ext, classes, dist) < 1e-12);
    for (int i = 0; i < 2; ++i) {
      CHECK(classes[i].size() ==
            static_cast<int>(ext.players[i].policies.size()));
      classes[i].Validate();
    }
  }
}

TEST_CASE("padding adds the requested number of candidates") {
  const auto game = build_matrix_game(example_payoff());
  const auto ext = extended_class(PureProfiles(game), Equilibrium::kNE);
  const auto classes = build_exact_classes(game, ext, FunctionKind::kQ, 25, 3);
  CHECK(classes[0].size() == 9 + 25);
  const auto again = build_exact_classes(game, ext, FunctionKind::kQ, 25, 3);
  CHECK(again[0].candidates == classes[0].candidates);
  // Each padded copy differs from its base in at most one cell.
  for (int j = 0; j < 25; ++j) {
    const auto& base = classes[0].candidates[j % 9];
    const auto& copy = classes[0].candidates[9 + j];
    int diff = 0;
    for (std::size_t k = 0; k < base.size(); ++k) diff += base[k] != copy[k];
    CHECK(diff <= 1);
  }
}

TEST_CASE("all-zero class on a unit-reward game") {
  const auto game = build_matrix_game({{1.0, 1.0}, {1.0, 1.0}});
  const auto ext = extended_class(PureProfiles(game), Equilibrium::kNE);
  const auto dist = DataDistribution::Uniform(game);
  const std::vector<FunctionClass> zeros = {Constant(game, 0, 0.0),
                                            Constant(game, 1, 0.0)};
  CHECK(realizability_error(game, ext, zeros, dist) == doctest::Approx(1.0));
  CHECK(completeness_error(game, ext, zeros, dist) == doctest::Approx(1.0));

  // Adding T f for every (pi, f) closes the class.
  auto closed = zeros;
  closed[0].candidates.push_back(Table(4, 1.0));
  CHECK(completeness_error(game, ext, closed, dist) == doctest::Approx(0.0));
  CHECK(realizability_error(game, ext, closed, dist) <=
        realizability_error(game, ext, zeros, dist));
}

TEST_CASE("grid classes") {
  const auto game = build_matrix_game(example_payoff());
  const auto coarse = build_grid_class(game, 0, FunctionKind::kQ, 1.0);
  CHECK(coarse.size() == 512);
  bool has_zero = false, has_one = false;
  for (const auto& f : coarse.candidates) {
    has_zero |= f == Table(9, 0.0);
    has_one |= f == Table(9, 1.0);
  }
  CHECK(has_zero);
  CHECK(has_one);
  CHECK(build_grid_class(game, 0, FunctionKind::kQ, 0.5).size() == 19683);
  CHECK_THROWS_AS(build_grid_class(game, 0, FunctionKind::kQ, 0.25),
                  std::length_error);
  CHECK(build_grid_class(game, 0, FunctionKind::kV, 0.25).size() == 5);
}

TEST_CASE("coverage coefficient") {
  const auto game = build_matrix_game(example_payoff());
  const auto cls = PureProfiles(game);
  const auto ext = extended_class(cls, Equilibrium::kNE);
  const auto dist = DataDistribution::MatrixExample(0.6, 0.01);
  const auto classes = build_exact_classes(game, ext, FunctionKind::kQ, 60, 1);
  const auto& pi = cls.policies[0];
  CHECK(coverage_coefficient(game, pi, classes[0], dist.table(), dist.table()) ==
        doctest::Approx(1.0));
  const auto point = occupancy(game, pi);
  const double c = coverage_coefficient(game, pi, classes[0], point,
                                        dist.table());
  CHECK(std::isfinite(c));
  CHECK(c <= 1.0 / 0.6 + 1e-12);
  // Never above the raw density ratio.
  for (int k = 1; k < 9; ++k) {
    const auto d = occupancy(game, cls.policies[k]);
    double ratio = 0.0;
    for (int j = 0; j < 9; ++j) ratio = std::max(ratio, d[j] / dist.table()[j]);
    CHECK(coverage_coefficient(game, cls.policies[k], classes[0], d,
                               dist.table()) <= ratio + 1e-9);
  }
  // Mass where the data has none.
  const Table missing = {0.5, 0.5, 0, 0, 0, 0, 0, 0, 0};
  const Table only_first = {1, 0, 0, 0, 0, 0, 0, 0, 0};
  auto off = Constant(game, 0, 0.0);
  off.candidates[0] = game.rewards(0);
  off.candidates[0][1] = 0.2;
  CHECK(std::isinf(coverage_coefficient(game, pi, off, missing, only_first)));
}

TEST_CASE("mirror class and file round trip") {
  const auto game = build_random_game(5, 2, 2, {2, 2}, 0.5);
  const auto ext = extended_class(PureProfiles(game), Equilibrium::kNE);
  const auto classes = build_exact_classes(game, ext, FunctionKind::kQ, 3, 2);
  const auto mirror = mirror_class(classes[0], 1);
  CHECK(mirror.player == 1);
  for (int k = 0; k < mirror.size(); ++k) {
    for (std::size_t j = 0; j < mirror.table_size(); ++j) {
      CHECK(mirror.candidates[k][j] ==
            doctest::Approx(game.v_max() - classes[0].candidates[k][j]));
    }
  }
  const auto text = serialize_function_class(classes[1]);
  const auto back = deserialize_function_class(text);
  CHECK(back.candidates == classes[1].candidates);
  CHECK(back.player == 1);
  CHECK_THROWS_AS(deserialize_function_class("{]"), ParseError);
}

}  // namespace
}  // namespace bcel
