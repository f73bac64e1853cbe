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

#include "bcel/bcel_q.hpp"

#include <cmath>
#include <limits>
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

PolicyClass PureProfiles(const MarkovGame& game) {
  std::vector<std::vector<PlayerPolicy>> per_player(game.num_players());
  for (int i = 0; i < game.num_players(); ++i) {
    const int n = game.joint().action_count(i);
    for (int a = 0; a < n; ++a) {
      per_player[i].push_back(PlayerPolicy::Deterministic(
          n, std::vector<int>(game.num_states(), a)));
    }
  }
  return PolicyClass::ProductOf(game.joint(), per_player);
}

FunctionClass RandomQClass(const MarkovGame& game, int player, int size,
                           std::mt19937_64& gen) {
  std::uniform_real_distribution<double> unif(0.0, game.v_max());
  FunctionClass cls;
  cls.player = player;
  cls.num_states = game.num_states();
  cls.num_joint_actions = game.num_joint_actions();
  cls.v_max = game.v_max();
  for (int k = 0; k < size; ++k) {
    Table f(game.num_cells());
    for (auto& x : f) x = unif(gen);
    cls.candidates.push_back(f);
  }
  return cls;
}

TEST_CASE("sufficient-statistics losses equal the tuple sums") {
  std::mt19937_64 gen(1);
  for (double gamma : {0.0, 0.6, 0.9}) {
    const auto game = build_random_game(2, 2, 3, {2, 2}, gamma);
    const auto data = sample_dataset(game, DataDistribution::Random(game, 3),
                                     400, 4);
    const auto pol = testing::RandomPlayerPolicy(gen, 3, 4);
    const auto pi = JointPolicy::Correlated(game.joint(), 3, pol.probs);
    const auto cls = RandomQClass(game, 1, 6, gen);
    const EmpiricalBellman eb(game, data);
    const auto losses = eb.losses(1, cls.candidates[0], pi, cls);
    for (int k = 0; k < cls.size(); ++k) {
      const double naive = empirical_loss(game, data, 1, cls.candidates[k],
                                          cls.candidates[0], pi);
      CHECK(losses[k] == doctest::Approx(naive).epsilon(1e-10));
    }
    const auto errors = eb.bellman_errors(1, pi, cls);
    for (int k = 0; k < cls.size(); ++k) {
      const double naive = empirical_bellman_error(game, data, 1,
                                                   cls.candidates[k], pi, cls);
      CHECK(errors[k] >= 0.0);
      CHECK(std::abs(errors[k] - naive) < 1e-10);
    }
  }
}

TEST_CASE("default threshold arithmetic") {
  CHECK(threshold_epsilon_v(1000, 9, 10, 0.1, 1.0, 0.0) ==
        doctest::Approx(80 * std::log(900.0) / 1000));
  CHECK(threshold_epsilon_v(1000, 9, 10, 0.1, 1.0, 0.0) ==
        doctest::Approx(0.5441).epsilon(1e-3));
  CHECK(threshold_epsilon_v(2000, 9, 10, 0.1, 1.0, 0.0) ==
        doctest::Approx(threshold_epsilon_v(1000, 9, 10, 0.1, 1.0, 0.0) / 2));
  CHECK(threshold_epsilon_v(1000, 9, 10, 0.1, 1.0, 0.01) ==
        doctest::Approx(80 * std::log(900.0) / 1000 + 0.3));
  CHECK_THROWS(threshold_epsilon_v(0, 9, 10, 0.1, 1.0, 0.0));
  ThresholdRule fixed{ThresholdMode::kFixed};
  fixed.value = 0.25;
  CHECK(resolve_threshold(fixed, 10, 1, 1, 1) == 0.25);
}

TEST_CASE("version space boundaries and monotonicity") {
  const std::vector<double> errors = {0.3, 0.0, 0.1, 0.0, 0.7};
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(build_version_space(0, 0, errors, inf).members.size() == 5);
  CHECK(build_version_space(0, 0, errors, 0.0).members ==
        std::vector<int>{1, 3});
  std::size_t last = 0;
  for (double eps : {0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 1.0}) {
    const auto vs = build_version_space(0, 0, errors, eps);
    CHECK(vs.members.size() >= last);
    last = vs.members.size();
  }
  // The minimizer is kept even when every error exceeds the threshold.
  const auto vs = build_version_space(0, 0, {0.5, 0.2}, 0.0);
  CHECK(vs.members == std::vector<int>{1});
  CHECK_THROWS(build_version_space(0, 0, errors, -1.0));
}

TEST_CASE("singleton version space collapses the interval") {
  const auto game = build_matrix_game(example_payoff());
  const auto pi = JointPolicy::Pure(game.joint(), 1, {0, 0});
  FunctionClass cls;
  cls.num_states = 1;
  cls.num_joint_actions = 9;
  cls.candidates = {game.rewards(0)};
  const auto vs = build_version_space(0, 0, {0.0}, 0.0);
  CHECK(optimistic_value(vs, cls, pi, 0).value ==
        pessimistic_value(vs, cls, pi, 0).value);
  VersionSpace empty;
  CHECK_THROWS_AS(optimistic_value(empty, cls, pi, 0), std::logic_error);
}

TEST_CASE("singleton policy class selects its member") {
  const auto game = build_matrix_game(example_payoff());
  const auto cls = PolicyClass::FromPolicies(
      {JointPolicy::Pure(game.joint(), 1, {0, 0})});
  const auto ext = extended_class(cls, Equilibrium::kNE);
  const auto classes = build_exact_classes(game, ext, FunctionKind::kQ);
  const auto data = sample_dataset(game, DataDistribution::Uniform(game), 100, 1);
  const auto result = run_bcel(game, ext, classes, data, {});
  CHECK(result.selected() == 0);
  CHECK(result.report.entries.size() == 1);
}

TEST_CASE("NE over a class without product members is rejected") {
  const auto game = build_matrix_game(example_payoff());
  std::vector<double> probs(9, 0.0);
  probs[0] = probs[4] = 0.5;
  const auto cls = PolicyClass::FromPolicies(
      {JointPolicy::Correlated(game.joint(), 1, probs)});
  const auto ext = extended_class(cls, Equilibrium::kNE);
  const auto classes = build_exact_classes(game, ext, FunctionKind::kQ);
  const auto data = sample_dataset(game, DataDistribution::Uniform(game), 100, 1);
  CHECK_THROWS_AS(run_bcel(game, ext, classes, data, {}), std::invalid_argument);
  // The CCE response classes are defined for the same member.
  const auto cce = extended_class(cls, Equilibrium::kCCE);
  const auto cce_classes = build_exact_classes(game, cce, FunctionKind::kQ);
  CHECK(run_bcel(game, cce, cce_classes, data, {Equilibrium::kCCE, {}})
            .selected() == 0);
}

TEST_CASE("estimated gaps dominate self widths") {
  const auto game = build_random_game(9, 2, 2, {2, 2}, 0.7);
  const auto cls = PureProfiles(game);
  const auto ext = extended_class(cls, Equilibrium::kNE);
  const auto classes = build_exact_classes(game, ext, FunctionKind::kQ, 20, 5);
  const auto data = sample_dataset(game, DataDistribution::Random(game, 2), 300, 3);
  const auto result = run_bcel(game, ext, classes, data, {});
  for (const auto& e : result.report.entries) {
    for (int i = 0; i < 2; ++i) {
      const auto& own = result.intervals[i][ext.players[i].base_index[e.policy]];
      CHECK(own.width() >= 0.0);
      CHECK(e.estimated_gap >= own.width() - 1e-12);
    }
  }
  const auto& best = result.report.entries[result.selected()];
  for (const auto& e : result.report.entries) {
    CHECK(best.estimated_gap <= e.estimated_gap);
  }
}

TEST_CASE("exhaustive data make estimated gaps track true gaps") {
  const auto matrix = build_matrix_game(example_payoff());
  const auto mcls = PureProfiles(matrix);
  const auto mext = extended_class(mcls, Equilibrium::kNE);
  const auto mdata =
      exhaustive_dataset(matrix, DataDistribution::Uniform(matrix), 100000 * 9);
  const auto mresult = run_bcel(
      matrix, mext, build_exact_classes(matrix, mext, FunctionKind::kQ), mdata,
      {});
  CHECK(mresult.report.entries[0].estimated_gap <= 0.05);
  CHECK(mresult.selected() == 0);

  // With padded candidates the excess of estimated over true gaps shrinks
  // as n grows.
  const auto padded = build_exact_classes(matrix, mext, FunctionKind::kQ, 60, 2);
  std::vector<double> gaps;
  for (const auto& pi : mcls.policies) {
    gaps.push_back(true_gap(matrix, mcls, pi, Equilibrium::kNE).gap);
  }
  double last = std::numeric_limits<double>::infinity();
  for (int n : {900, 9000, 90000, 900000}) {
    const auto data =
        exhaustive_dataset(matrix, DataDistribution::Uniform(matrix), n);
    const auto result = run_bcel(matrix, mext, padded, data, {});
    double excess = 0.0;
    for (const auto& e : result.report.entries) {
      CHECK(e.estimated_gap >= gaps[e.policy] - 1e-9);
      excess = std::max(excess, e.estimated_gap - gaps[e.policy]);
    }
    CHECK(excess <= last + 1e-12);
    last = excess;
  }
  CHECK(last < 0.5);
}

TEST_CASE("exact classes contain the truth on most samples") {
  const auto game = build_random_game(13, 2, 2, {2, 2}, 0.5);
  const auto cls = PureProfiles(game);
  const auto ext = extended_class(cls, Equilibrium::kNE);
  const auto classes = build_exact_classes(game, ext, FunctionKind::kQ, 10, 1);
  const auto truth = exact_q_tables(game, ext);
  const auto dist = DataDistribution::Random(game, 6);
  int covered = 0;
  const int trials = 40;
  for (int t = 0; t < trials; ++t) {
    const auto data = sample_dataset(game, dist, 500, 100 + t);
    const auto result = run_bcel(game, ext, classes, data, {});
    bool ok = true;
    for (int i = 0; i < 2; ++i) {
      for (std::size_t k = 0; k < truth[i].size(); ++k) {
        const double v = value_at(truth[i][k], ext.players[i].policies[k], 0);
        ok &= result.intervals[i][k].lower <= v + 1e-9 &&
              v <= result.intervals[i][k].upper + 1e-9;
      }
    }
    covered += ok;
  }
  CHECK(covered >= 36);
}

TEST_CASE("calibration is deterministic and exact data give zero") {
  const auto game = build_random_game(14, 2, 2, {2, 2}, 0.5);
  const auto ext = extended_class(PureProfiles(game), Equilibrium::kNE);
  const auto classes = build_exact_classes(game, ext, FunctionKind::kQ);
  const auto dist = DataDistribution::Random(game, 1);
  const double a = calibrate_threshold(game, ext, classes, dist, 200, 0.1, 20, 9);
  const double b = calibrate_threshold(game, ext, classes, dist, 200, 0.1, 20, 9);
  CHECK(a == b);
  CHECK(a >= 0.0);
  const auto matrix = build_matrix_game(example_payoff());
  const auto mext = extended_class(PureProfiles(matrix), Equilibrium::kNE);
  const auto mclasses = build_exact_classes(matrix, mext, FunctionKind::kQ);
  CHECK(calibrate_threshold(matrix, mext, mclasses,
                            DataDistribution::MatrixExample(0.6, 0.01), 100,
                            0.1, 10, 1) < 1e-12);
}

}  // namespace
}  // namespace bcel
