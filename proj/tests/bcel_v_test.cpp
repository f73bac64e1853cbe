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

#include "bcel/bcel_v.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "bcel/bcel_q.hpp"
#include "bcel/exact_oracle.hpp"
#include "bcel/function_classes.hpp"
#include "bcel/game_model.hpp"
#include "bcel/offline_data.hpp"
#include "doctest.h"
#include "oracles.hpp"

namespace bcel {
namespace {

PolicyClass RandomProducts(const MarkovGame& game, int per_player,
                           std::mt19937_64& gen) {
  std::vector<std::vector<PlayerPolicy>> lists(game.num_players());
  for (int i = 0; i < game.num_players(); ++i) {
    for (int k = 0; k < per_player; ++k) {
      lists[i].push_back(testing::RandomPlayerPolicy(
          gen, game.num_states(), game.joint().action_count(i)));
    }
  }
  return PolicyClass::ProductOf(game.joint(), lists);
}

JointPolicy BehaviorPolicy(const DataDistribution& dist,
                           const JointActionSpace& space) {
  std::vector<double> probs;
  for (int s = 0; s < dist.num_states(); ++s) {
    for (int a = 0; a < dist.num_joint_actions(); ++a) {
      probs.push_back(*dist.behavior(s, a));
    }
  }
  return JointPolicy::Correlated(space, dist.num_states(), probs);
}

TEST_CASE("behavior policy weights are one") {
  const auto game = build_random_game(1, 2, 3, {2, 2}, 0.6);
  const auto dist = DataDistribution::Random(game, 2);
  const auto data = sample_dataset(game, dist, 300, 3);
  const auto pi = BehaviorPolicy(dist, game.joint());
  const auto ctx = weighted_loss_context(dist, pi);
  CHECK(ctx.c_a == doctest::Approx(1.0));
  const std::vector<double> g = {0.3, 1.2, 2.0}, h = {0.1, 0.5, 2.4};
  double plain = 0.0;
  for (int k = 0; k < data.size(); ++k) {
    const double r = g[data.state(k)] - data.reward(k, 0) -
                     0.6 * h[data.next_state(k)];
    plain += r * r;
  }
  CHECK(weighted_empirical_loss(game, data, 0, g, h, pi) ==
        doctest::Approx(plain / data.size()));
}

TEST_CASE("single tuple loss") {
  const auto game = build_matrix_game(example_payoff());
  const auto dist = DataDistribution::MatrixExample(0.6, 0.01);
  OfflineDataset data(game, dist, 0);
  const int a = game.joint().Encode(std::vector<int>{1, 0});
  const std::vector<double> r = {0.25, 0.75};
  data.Append(0, a, r, 0);
  const auto pi = JointPolicy::Pure(game.joint(), 1, {1, 0});
  // Weight 1 / 0.01 and residual 0.5 - 0.25.
  CHECK(weighted_empirical_loss(game, data, 0, {0.5}, {0.0}, pi) ==
        doctest::Approx(100 * 0.0625));
}

TEST_CASE("zero behavior mass on a sampled cell is reported") {
  const auto game = build_matrix_game(example_payoff());
  std::vector<double> t(9, 0.0);
  t[0] = 1.0;
  const DataDistribution dist(1, 9, t);
  OfflineDataset data(game, dist, 0);
  const std::vector<double> r = {0.75, 0.25};
  data.Append(0, 1, r, 0);
  const auto pi = JointPolicy::Pure(game.joint(), 1, {0, 1});
  CHECK(std::isinf(weighted_loss_context(dist, pi).c_a));
  try {
    weighted_empirical_loss(game, data, 0, {0.5}, {0.0}, pi);
    FAIL("expected an error");
  } catch (const std::domain_error& e) {
    CHECK(std::string(e.what()).find("(s=0, a=1)") != std::string::npos);
  }
}

TEST_CASE("deterministic policy with exhaustive data has zero loss") {
  const auto game = build_matrix_game(example_payoff());
  const auto dist = DataDistribution::Uniform(game);
  const auto data = exhaustive_dataset(game, dist, 90);
  const auto pi = JointPolicy::Pure(game.joint(), 1, {2, 1});
  const double value = evaluate_policy(game, 0, pi).initial_value;
  CHECK(weighted_empirical_loss(game, data, 0, {value}, {value}, pi) ==
        doctest::Approx(0.0));
}

TEST_CASE("weighted loss is unbiased") {
  std::mt19937_64 gen(4);
  const auto game = build_random_game(5, 2, 3, {2, 2}, 0.8);
  const auto dist = DataDistribution::Random(game, 7);
  const auto data = sample_dataset(game, dist, 100000, 8);
  const auto pol = testing::RandomPlayerPolicy(gen, 3, 4);
  const auto pi = JointPolicy::Correlated(game.joint(), 3, pol.probs);
  const std::vector<double> g = {1.0, 3.0, 4.5};
  const double c_a = weighted_loss_context(dist, pi).c_a;
  const double empirical = weighted_empirical_loss(game, data, 1, g, g, pi);
  const double population = population_weighted_loss(game, dist, 1, g, pi);
  CHECK(std::abs(empirical - population) <=
        0.02 * c_a * game.v_max() * game.v_max());
}

TEST_CASE("fast path agrees with the weighted tuple sum") {
  std::mt19937_64 gen(5);
  const auto game = build_random_game(6, 2, 2, {2, 3}, 0.7);
  const auto dist = DataDistribution::Random(game, 1);
  const auto data = sample_dataset(game, dist, 500, 2);
  const auto cls = RandomProducts(game, 2, gen);
  const auto ext = extended_class(cls, Equilibrium::kNE);
  const auto classes = build_exact_classes(game, ext, FunctionKind::kV, 5, 3);
  const EmpiricalBellman eb(game, data);
  for (const auto& pi : ext.players[0].policies) {
    const auto ctx = weighted_loss_context(dist, pi);
    const auto& f = classes[0].candidates[1];
    const auto losses = eb.losses(0, f, pi, classes[0], &ctx.weights);
    for (int k = 0; k < classes[0].size(); ++k) {
      CHECK(losses[k] == doctest::Approx(weighted_empirical_loss(
                                             game, data, 0,
                                             classes[0].candidates[k], f, pi))
                             .epsilon(1e-10));
    }
  }
}

TEST_CASE("beta_g arithmetic") {
  const double eps = threshold_epsilon_v(1000, 9, 10, 0.1, 1.0, 0.0);
  CHECK(threshold_beta_g(1000, 9, 10, 0.1, 1.0, 0.0, 1.0) == doctest::Approx(eps));
  CHECK(threshold_beta_g(1000, 9, 10, 0.1, 1.0, 0.0, 2.0) ==
        doctest::Approx(1.0882).epsilon(1e-3));
  CHECK(threshold_beta_g(1000, 9, 10, 0.1, 1.0, 0.1, 4.0) ==
        doctest::Approx(4 * eps + 3.0));
}

TEST_CASE("V classes do not grow with the number of players") {
  std::mt19937_64 gen(6);
  for (int m : {2, 3}) {
    const auto game = build_random_game(7, m, 2, std::vector<int>(m, 2), 0.5);
    const auto ext = extended_class(RandomProducts(game, 2, gen),
                                    Equilibrium::kNE);
    const auto classes = build_exact_classes(game, ext, FunctionKind::kV);
    for (int i = 0; i < m; ++i) {
      CHECK(classes[i].size() ==
            static_cast<int>(ext.players[i].policies.size()));
      CHECK(classes[i].table_size() == 2u);
    }
  }
}

TEST_CASE("Q-type and V-type agree on single-state games") {
  std::mt19937_64 gen(8);
  for (int seed = 0; seed < 5; ++seed) {
    const auto game = build_random_game(50 + seed, 2, 1, {2, 3}, 0.0);
    const auto cls = RandomProducts(game, 3, gen);
    const auto ext = extended_class(cls, Equilibrium::kNE);
    const auto data = exhaustive_dataset(game, DataDistribution::Uniform(game), 6);
    BcelConfig config;
    config.threshold.mode = ThresholdMode::kFixed;
    const auto q = run_bcel(game, ext,
                            build_exact_classes(game, ext, FunctionKind::kQ),
                            data, config);
    const auto v = run_bcel_v(game, ext,
                              build_exact_classes(game, ext, FunctionKind::kV),
                              data, config);
    CHECK(q.selected() == v.selected());
    for (std::size_t k = 0; k < q.report.entries.size(); ++k) {
      CHECK(std::abs(q.report.entries[k].estimated_gap -
                     v.report.entries[k].estimated_gap) < 1e-9);
    }
  }
}

TEST_CASE("unbounded weights get the widest interval") {
  const auto game = build_matrix_game(example_payoff());
  std::vector<double> t(9, 0.0);
  t[0] = 0.5;
  t[4] = 0.5;
  const DataDistribution dist(1, 9, t);
  const auto cls = PolicyClass::FromPolicies(
      {JointPolicy::Pure(game.joint(), 1, {0, 0}),
       JointPolicy::Pure(game.joint(), 1, {0, 1})});
  const auto ext = extended_class(cls, Equilibrium::kNE);
  const auto data = sample_dataset(game, dist, 200, 1);
  const auto result = run_bcel_v(
      game, ext, build_exact_classes(game, ext, FunctionKind::kV), data, {});
  const auto& bad = result.intervals[0][ext.players[0].base_index[1]];
  CHECK(bad.unbounded);
  CHECK(bad.upper == game.v_max());
  CHECK(bad.lower == 0.0);
  CHECK_FALSE(result.intervals[0][ext.players[0].base_index[0]].unbounded);
}

}  // namespace
}  // namespace bcel
