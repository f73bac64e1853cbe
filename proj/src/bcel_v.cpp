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

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "bcel/exact_oracle.hpp"
#include "bcel/random.hpp"

namespace bcel {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string CellName(int s, int a) {
  return "(s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")";
}

}  // namespace

bool WeightedLossContext::bounded() const { return std::isfinite(c_a); }

WeightedLossContext weighted_loss_context(const DataDistribution& dist,
                                          const JointPolicy& pi) {
  WeightedLossContext ctx;
  ctx.num_states = dist.num_states();
  ctx.num_joint_actions = dist.num_joint_actions();
  if (pi.num_states() != ctx.num_states ||
      pi.num_joint_actions() != ctx.num_joint_actions) {
    throw std::invalid_argument("weighted_loss_context: shape mismatch");
  }
  ctx.behavior.assign(dist.table().size(), 0.0);
  ctx.weights.assign(dist.table().size(), 0.0);
  for (int s = 0; s < ctx.num_states; ++s) {
    for (int a = 0; a < ctx.num_joint_actions; ++a) {
      const auto idx = static_cast<std::size_t>(s) * ctx.num_joint_actions + a;
      const double b = dist.behavior(s, a).value_or(0.0);
      ctx.behavior[idx] = b;
      const double p = pi.prob(s, a);
      if (p == 0.0) continue;
      ctx.weights[idx] = b > 0.0 ? p / b : kInf;
      ctx.c_a = std::max(ctx.c_a, ctx.weights[idx]);
    }
  }
  return ctx;
}

double weighted_empirical_loss(const MarkovGame& game,
                               const OfflineDataset& data, int player,
                               const std::vector<double>& g_prime,
                               const std::vector<double>& g,
                               const JointPolicy& pi) {
  const auto ctx = weighted_loss_context(data.distribution(), pi);
  double total = 0.0;
  for (int k = 0; k < data.size(); ++k) {
    const int s = data.state(k);
    const int a = data.action(k);
    const double w = ctx.weight(s, a);
    if (!std::isfinite(w)) {
      throw std::domain_error("weighted_empirical_loss: d_A(a|s) = 0 at " +
                              CellName(s, a));
    }
    const double res = g_prime[s] - data.reward(k, player) -
                       game.discount() * g[data.next_state(k)];
    total += w * res * res;
  }
  return total / data.size();
}

double threshold_beta_g(int n, double class_total, double ext_size,
                        double delta, double v_max, double eps_f, double c_a,
                        double stat_constant, double approx_constant) {
  if (!(c_a >= 0.0)) throw std::invalid_argument("threshold_beta_g: C_A < 0");
  const double stat =
      threshold_epsilon_v(n, class_total, ext_size, delta, v_max, 0.0,
                          stat_constant, approx_constant);
  return c_a * stat + approx_constant * eps_f;
}

std::vector<std::vector<double>> v_thresholds(
    const MarkovGame& game, const ExtendedClass& ext,
    const std::vector<FunctionClass>& classes, const OfflineDataset& data,
    const ThresholdRule& rule) {
  const double total = total_class_size(classes);
  const double ext_size = static_cast<double>(ext.all.size());
  std::vector<std::vector<double>> out(ext.num_players());
  for (int i = 0; i < ext.num_players(); ++i) {
    for (const auto& pi : ext.players[i].policies) {
      if (rule.mode == ThresholdMode::kFixed ||
          rule.mode == ThresholdMode::kCalibrated) {
        out[i].push_back(rule.value);
        continue;
      }
      const double c_a = weighted_loss_context(data.distribution(), pi).c_a;
      if (!std::isfinite(c_a)) {
        out[i].push_back(kInf);
      } else if (rule.mode == ThresholdMode::kPaper) {
        out[i].push_back(threshold_beta_g(data.size(), total, ext_size,
                                          rule.delta, game.v_max(), rule.eps_f,
                                          c_a));
      } else {
        out[i].push_back(threshold_beta_g(
            data.size(), total, ext_size, rule.delta, game.v_max(), rule.eps_f,
            c_a, rule.stat_constant, rule.approx_constant));
      }
    }
  }
  return out;
}

BcelResult run_bcel_v(const MarkovGame& game, const ExtendedClass& ext,
                      const std::vector<FunctionClass>& classes,
                      const OfflineDataset& data, const BcelConfig& config) {
  if (ext.kind != config.eq) {
    throw std::invalid_argument("run_bcel_v: extended class built for " +
                                to_string(ext.kind));
  }
  const auto thresholds = v_thresholds(game, ext, classes, data, config.threshold);
  const double slack = kBellmanErrorSlack * game.v_max() * game.v_max();
  const EmpiricalBellman eb(game, data);
  const int s0 = game.initial_state();
  BcelResult out;
  out.threshold = config.threshold.value;
  out.intervals.resize(ext.num_players());
  out.spaces.resize(ext.num_players());
  for (int i = 0; i < ext.num_players(); ++i) {
    const auto& cls = classes.at(i);
    if (cls.kind != FunctionKind::kV) {
      throw std::invalid_argument("run_bcel_v: needs V-function classes");
    }
    const auto& policies = ext.players[i].policies;
    for (int k = 0; k < static_cast<int>(policies.size()); ++k) {
      const auto ctx = weighted_loss_context(data.distribution(), policies[k]);
      const double eps = thresholds[i][k];
      if (!ctx.bounded()) {
        VersionSpace vs;
        vs.player = i;
        vs.policy = k;
        vs.threshold = eps;
        vs.effective = kInf;
        for (int c = 0; c < cls.size(); ++c) vs.members.push_back(c);
        out.intervals[i].push_back({game.v_max(), 0.0, -1, -1, cls.size(), eps,
                                    true});
        out.spaces[i].push_back(std::move(vs));
        continue;
      }
      auto vs = build_version_space(
          i, k, eb.bellman_errors(i, policies[k], cls, &ctx.weights),
          eps + slack);
      vs.threshold = eps;
      const auto hi = optimistic_value(vs, cls, policies[k], s0);
      const auto lo = pessimistic_value(vs, cls, policies[k], s0);
      out.intervals[i].push_back({hi.value, lo.value, hi.candidate,
                                  lo.candidate,
                                  static_cast<int>(vs.members.size()), eps,
                                  false});
      out.spaces[i].push_back(std::move(vs));
    }
  }
  out.report = assemble_gap_report(ext, out.intervals);
  return out;
}

double calibrate_threshold_v(const MarkovGame& game, const ExtendedClass& ext,
                             const std::vector<FunctionClass>& classes,
                             const DataDistribution& dist, int n, double delta,
                             int pilots, std::uint64_t seed) {
  if (pilots < 1) {
    throw std::invalid_argument("calibrate_threshold_v: pilots < 1");
  }
  std::vector<std::vector<std::vector<double>>> v(ext.num_players());
  std::vector<std::vector<Table>> weights(ext.num_players());
  for (int i = 0; i < ext.num_players(); ++i) {
    for (const auto& pi : ext.players[i].policies) {
      auto ctx = weighted_loss_context(dist, pi);
      if (!ctx.bounded()) continue;
      v[i].push_back(evaluate_policy(game, i, pi).v);
      weights[i].push_back(std::move(ctx.weights));
    }
  }
  const Rng master(seed);
  std::vector<double> samples;
  for (int p = 0; p < pilots; ++p) {
    const auto data = sample_dataset(game, dist, n, master.Derive(p).key());
    const EmpiricalBellman eb(game, data);
    double worst = 0.0;
    for (int i = 0; i < ext.num_players(); ++i) {
      for (std::size_t k = 0; k < v[i].size(); ++k) {
        // The policy only matters through the weights for V classes.
        worst = std::max(worst, eb.bellman_error(i, v[i][k],
                                                 ext.players[i].policies[0],
                                                 classes.at(i), &weights[i][k]));
      }
    }
    samples.push_back(worst);
  }
  std::sort(samples.begin(), samples.end());
  auto rank = static_cast<std::size_t>(std::ceil((1.0 - delta) * samples.size()));
  rank = std::clamp<std::size_t>(rank, 1, samples.size());
  return samples[rank - 1];
}

double population_weighted_loss(const MarkovGame& game,
                                const DataDistribution& dist, int player,
                                const std::vector<double>& g,
                                const JointPolicy& pi) {
  const auto& d_s = dist.state_marginal();
  double total = 0.0;
  for (int s = 0; s < game.num_states(); ++s) {
    if (d_s[s] == 0.0) continue;
    for (int a = 0; a < game.num_joint_actions(); ++a) {
      const double p = pi.prob(s, a);
      if (p == 0.0) continue;
      double inner = 0.0;
      for (int t = 0; t < game.num_states(); ++t) {
        const double q = game.transition(s, a, t);
        if (q == 0.0) continue;
        const double res =
            g[s] - game.reward(player, s, a) - game.discount() * g[t];
        inner += q * res * res;
      }
      total += d_s[s] * p * inner;
    }
  }
  return total;
}

}  // namespace bcel
