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

#include "bcel/zerosum.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "bcel/exact_oracle.hpp"
#include "bcel/function_classes.hpp"
#include "bcel/game_model.hpp"
#include "bcel/offline_data.hpp"
#include "doctest.h"
#include "oracles.hpp"

namespace bcel {
namespace {

std::vector<PlayerPolicy> PureActions(int n) {
  std::vector<PlayerPolicy> out;
  for (int a = 0; a < n; ++a) out.push_back(PlayerPolicy::Deterministic(n, {a}));
  return out;
}

std::vector<PlayerPolicy> RandomList(std::mt19937_64& gen, int s, int a,
                                     int count) {
  std::vector<PlayerPolicy> out;
  for (int k = 0; k < count; ++k) {
    out.push_back(testing::RandomPlayerPolicy(gen, s, a));
  }
  return out;
}

std::vector<FunctionClass> MirroredClasses(const MarkovGame& game,
                                           const PolicyClass& cls,
                                           int padding = 0) {
  const auto ext = extended_class(cls, Equilibrium::kNE);
  std::vector<FunctionClass> out;
  out.push_back(build_exact_class(game, 0, FunctionKind::kQ,
                                  ext.players[0].policies, padding, 11));
  out.push_back(mirror_class(out[0], 1));
  return out;
}

TEST_CASE("example table") {
  const auto game = build_matrix_game(example_payoff());
  const auto t = exact_interval_table(game, PureActions(3), PureActions(3));
  CHECK(t.V(0, 0) == doctest::Approx(0.5));
  CHECK(table_duality_gap(t, 0, 0) == doctest::Approx(0.0));
  const auto eq = exact_equilibrium(t);
  CHECK(eq.mu == 0);
  CHECK(eq.nu == 0);
  const auto sel = select_independent(t);
  CHECK(sel.mu == 0);
  CHECK(sel.nu == 0);
  const auto joint = joint_argmin_J(t);
  CHECK(joint.mu == 0);
  CHECK(joint.nu == 0);
  CHECK(joint.objective == doctest::Approx(0.0));
}

TEST_CASE("interval table rejects general-sum games") {
  const auto game = build_random_game(1, 2, 1, {2, 2}, 0.0);
  const auto data = exhaustive_dataset(game, DataDistribution::Uniform(game), 4);
  CHECK_THROWS_AS(build_interval_table(game, PureActions(2), PureActions(2), {},
                                       data, {}),
                  std::invalid_argument);
}

TEST_CASE("mirrored classes give mirrored intervals") {
  std::mt19937_64 gen(3);
  for (int seed = 0; seed < 5; ++seed) {
    const auto game =
        make_zero_sum(build_random_game(20 + seed, 2, 2, {2, 2}, 0.6));
    const auto mx = RandomList(gen, 2, 2, 3), mn = RandomList(gen, 2, 2, 2);
    const auto cls = zero_sum_class(game, mx, mn);
    const auto classes = MirroredClasses(game, cls, 4);
    const auto data =
        sample_dataset(game, DataDistribution::Random(game, seed), 400, seed);
    const auto t = build_interval_table(game, mx, mn, classes, data, {});
    CHECK(t.mirror_error < 1e-9);
    for (int mu = 0; mu < t.rows; ++mu) {
      for (int nu = 0; nu < t.cols; ++nu) {
        CHECK(t.Lower(mu, nu) <= t.Upper(mu, nu));
      }
    }
  }
}

TEST_CASE("exhaustive data and exact classes collapse the intervals") {
  const auto game = build_matrix_game(example_payoff());
  const auto cls = zero_sum_class(game, PureActions(3), PureActions(3));
  const auto data = exhaustive_dataset(game, DataDistribution::Uniform(game), 9);
  ThresholdRule fixed;
  fixed.mode = ThresholdMode::kFixed;
  const auto t = build_interval_table(game, PureActions(3), PureActions(3),
                                      MirroredClasses(game, cls), data, fixed);
  for (int mu = 0; mu < 3; ++mu) {
    for (int nu = 0; nu < 3; ++nu) {
      CHECK(std::abs(t.Upper(mu, nu) - t.V(mu, nu)) < 1e-6);
      CHECK(std::abs(t.Lower(mu, nu) - t.V(mu, nu)) < 1e-6);
    }
  }
  const auto sel = select_independent(t);
  CHECK(sel.mu == 0);
  CHECK(sel.nu == 0);
}

TEST_CASE("objective identities on random instances") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int seed = 0; seed < 10; ++seed) {
    const auto game =
        make_zero_sum(build_random_game(40 + seed, 2, 2, {2, 3}, 0.5));
    const auto mx = RandomList(gen, 2, 2, 3), mn = RandomList(gen, 2, 3, 4);
    auto t = exact_interval_table(game, mx, mn);
    // Degenerate table: J is the duality gap.
    for (int mu = 0; mu < t.rows; ++mu) {
      for (int nu = 0; nu < t.cols; ++nu) {
        CHECK(objective_J(t, mu, nu) ==
              doctest::Approx(table_duality_gap(t, mu, nu)));
      }
    }
    // Random widening around the exact entries.
    for (std::size_t k = 0; k < t.exact.size(); ++k) {
      t.upper[k] = t.exact[k] + unit(gen);
      t.lower[k] = t.exact[k] - unit(gen);
    }
    const auto sel = select_independent(t);
    const auto joint = joint_argmin_J(t);
    CHECK(sel.objective == doctest::Approx(joint.objective));
    CHECK(sel.objective == doctest::Approx(separable_min_J(t)));
    for (int mu = 0; mu < t.rows; ++mu) {
      for (int nu = 0; nu < t.cols; ++nu) {
        CHECK(objective_J(t, mu, nu) >= table_duality_gap(t, mu, nu) - 1e-12);
      }
    }
  }
}

TEST_CASE("duality gap against the NE gap") {
  std::mt19937_64 gen(5);
  for (int seed = 0; seed < 10; ++seed) {
    const auto game =
        make_zero_sum(build_random_game(60 + seed, 2, 2, {2, 2}, 0.7));
    const auto mx = RandomList(gen, 2, 2, 3), mn = RandomList(gen, 2, 2, 3);
    const auto cls = zero_sum_class(game, mx, mn);
    const auto t = exact_interval_table(game, mx, mn);
    for (int mu = 0; mu < t.rows; ++mu) {
      for (int nu = 0; nu < t.cols; ++nu) {
        const auto& pi = cls.policies[mu * t.cols + nu];
        const double dual = table_duality_gap(t, mu, nu);
        CHECK(sum_form_gap(game, cls, pi) == doctest::Approx(dual));
        const double ne = true_gap(game, cls, pi, Equilibrium::kNE).gap;
        CHECK(ne <= dual + 1e-12);
        CHECK(dual <= 2 * ne + 1e-12);
      }
    }
  }
}

TEST_CASE("proposition bound") {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> unit(0.0, 0.3);
  for (int seed = 0; seed < 10; ++seed) {
    const auto game =
        make_zero_sum(build_random_game(80 + seed, 2, 2, {2, 2}, 0.5));
    const auto mx = RandomList(gen, 2, 2, 3), mn = RandomList(gen, 2, 2, 3);
    auto t = exact_interval_table(game, mx, mn);
    for (std::size_t k = 0; k < t.exact.size(); ++k) {
      t.upper[k] = t.exact[k] + unit(gen);
      t.lower[k] = t.exact[k] - unit(gen);
    }
    const auto eq = exact_equilibrium(t);
    const auto sel = select_independent(t);
    const auto bound = proposition_bound(t, eq.mu, eq.nu);
    CHECK(table_duality_gap(t, sel.mu, sel.nu) <= bound.bound() + 1e-12);
    CHECK(bound.reference_gap == doctest::Approx(eq.objective));
  }
}

}  // namespace
}  // namespace bcel
