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

#include "bcel/exact_oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bcel {

double value_at(const Table& f, const JointPolicy& pi, int s) {
  const auto row = pi.at(s);
  const double* fs = f.data() + static_cast<std::size_t>(s) * row.size();
  double v = 0.0;
  for (std::size_t a = 0; a < row.size(); ++a) v += row[a] * fs[a];
  return v;
}

std::vector<double> state_values(const Table& f, const JointPolicy& pi) {
  std::vector<double> v(pi.num_states());
  for (int s = 0; s < pi.num_states(); ++s) v[s] = value_at(f, pi, s);
  return v;
}

Table expected_next_value(const MarkovGame& game, const JointPolicy& pi,
                          const Table& f) {
  const auto v = state_values(f, pi);
  Table out(game.num_cells());
  for (int s = 0; s < game.num_states(); ++s) {
    for (int a = 0; a < game.num_joint_actions(); ++a) {
      const auto row = game.transition_row(s, a);
      double e = 0.0;
      for (int t = 0; t < game.num_states(); ++t) e += row[t] * v[t];
      out[static_cast<std::size_t>(s) * game.num_joint_actions() + a] = e;
    }
  }
  return out;
}

Table bellman_apply(const MarkovGame& game, int player, const JointPolicy& pi,
                    const Table& f) {
  Table out = expected_next_value(game, pi, f);
  const auto& r = game.rewards(player);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = r[k] + game.discount() * out[k];
  }
  return out;
}

std::vector<double> bellman_apply_state(const MarkovGame& game, int player,
                                        const JointPolicy& pi,
                                        const std::vector<double>& g) {
  std::vector<double> out(game.num_states(), 0.0);
  for (int s = 0; s < game.num_states(); ++s) {
    for (int a = 0; a < game.num_joint_actions(); ++a) {
      const double p = pi.prob(s, a);
      if (p == 0.0) continue;
      const auto row = game.transition_row(s, a);
      double next = 0.0;
      for (int t = 0; t < game.num_states(); ++t) next += row[t] * g[t];
      out[s] += p * (game.reward(player, s, a) + game.discount() * next);
    }
  }
  return out;
}

namespace {

// I - gamma P^pi on the (s, a) space, with
// P^pi[(s,a), (s',a')] = P(s'|s,a) pi(a'|s').
Eigen::MatrixXd FixedPointMatrix(const MarkovGame& game,
                                 const JointPolicy& pi) {
  const int A = game.num_joint_actions();
  const int n = game.num_cells();
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
  for (int s = 0; s < game.num_states(); ++s) {
    for (int a = 0; a < A; ++a) {
      const int row = s * A + a;
      const auto trans = game.transition_row(s, a);
      for (int t = 0; t < game.num_states(); ++t) {
        if (trans[t] == 0.0) continue;
        const auto next = pi.at(t);
        for (int b = 0; b < A; ++b) {
          m(row, t * A + b) -= game.discount() * trans[t] * next[b];
        }
      }
    }
  }
  return m;
}

double Residual(const MarkovGame& game, int player, const JointPolicy& pi,
                const Table& q) {
  const auto tq = bellman_apply(game, player, pi, q);
  double worst = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    worst = std::max(worst, std::abs(q[k] - tq[k]));
  }
  return worst;
}

}  // namespace

PolicyEvaluation evaluate_policy(const MarkovGame& game, int player,
                                 const JointPolicy& pi) {
  const auto m = FixedPointMatrix(game, pi);
  const auto& r = game.rewards(player);
  Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(r.data(), r.size());
  Eigen::VectorXd sol = m.partialPivLu().solve(rhs);
  PolicyEvaluation out;
  out.q.assign(sol.data(), sol.data() + sol.size());
  if (!sol.allFinite() || Residual(game, player, pi, out.q) > 1e-10) {
    return evaluate_policy_iterative(game, player, pi);
  }
  out.v = state_values(out.q, pi);
  out.initial_value = out.v[game.initial_state()];
  return out;
}

PolicyEvaluation evaluate_policy_iterative(const MarkovGame& game, int player,
                                           const JointPolicy& pi, double tol) {
  PolicyEvaluation out;
  out.used_fallback = true;
  out.q.assign(game.num_cells(), 0.0);
  // Contraction in sup norm: the gap to the fixed point after the update is at
  // most gamma / (1 - gamma) times the last increment.
  const int max_iter = 1000000;
  for (int it = 0; it < max_iter; ++it) {
    auto next = bellman_apply(game, player, pi, out.q);
    double diff = 0.0;
    for (std::size_t k = 0; k < next.size(); ++k) {
      diff = std::max(diff, std::abs(next[k] - out.q[k]));
    }
    out.q = std::move(next);
    if (diff <= tol) break;
  }
  out.v = state_values(out.q, pi);
  out.initial_value = out.v[game.initial_state()];
  return out;
}

Table occupancy(const MarkovGame& game, const JointPolicy& pi) {
  const auto m = FixedPointMatrix(game, pi);
  const int A = game.num_joint_actions();
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(game.num_cells());
  const int s0 = game.initial_state();
  for (int a = 0; a < A; ++a) {
    rho(s0 * A + a) = (1.0 - game.discount()) * pi.prob(s0, a);
  }
  // d^T (I - gamma P^pi) = (1 - gamma) rho^T.
  Eigen::VectorXd d = m.transpose().partialPivLu().solve(rho);
  Table out(d.data(), d.data() + d.size());
  for (auto& x : out) x = std::max(x, 0.0);
  return out;
}

std::vector<double> state_marginal(const Table& d, int num_states) {
  const std::size_t A = d.size() / num_states;
  std::vector<double> out(num_states, 0.0);
  for (int s = 0; s < num_states; ++s) {
    for (std::size_t a = 0; a < A; ++a) out[s] += d[s * A + a];
  }
  return out;
}

GapResult true_gap(const MarkovGame& game, const PolicyClass& cls,
                   const JointPolicy& pi, Equilibrium eq) {
  GapResult out;
  out.gap = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < game.num_players(); ++i) {
    PlayerDeviation dev;
    dev.base_value = evaluate_policy(game, i, pi).initial_value;
    dev.best_value = -std::numeric_limits<double>::infinity();
    const auto resp = response_class(pi, i, eq, cls);
    for (std::size_t k = 0; k < resp.members.size(); ++k) {
      const double v = evaluate_policy(game, i, resp.members[k]).initial_value;
      dev.member_values.push_back(v);
      if (v > dev.best_value) {
        dev.best_value = v;
        dev.best_member = static_cast<int>(k);
      }
    }
    if (dev.gain() > out.gap) {
      out.gap = dev.gain();
      out.argmax_player = i;
    }
    out.players.push_back(std::move(dev));
  }
  return out;
}

namespace {

// Value iteration on V until the increment is below 1e-13, then returns the
// greedy decision computed by `improve`, which maps V to (new V, choice).
template <typename Improve>
std::vector<int> GreedyFixedPoint(int num_states, Improve improve) {
  std::vector<double> v(num_states, 0.0);
  std::vector<int> choice;
  for (int it = 0; it < 1000000; ++it) {
    auto [next, greedy] = improve(v);
    double diff = 0.0;
    for (int s = 0; s < num_states; ++s) {
      diff = std::max(diff, std::abs(next[s] - v[s]));
    }
    v = std::move(next);
    choice = std::move(greedy);
    if (diff <= 1e-13) break;
  }
  return choice;
}

}  // namespace

BestResponse unrestricted_best_response(const MarkovGame& game, int player,
                                        const JointPolicy& pi) {
  const auto& space = game.joint();
  const int S = game.num_states();
  const int n_own = space.action_count(player);
  const auto others = space.Others(player);
  const auto rest = marginalize(pi, others);
  const auto [proj, sub_size] = space.Projection(others);
  const double gamma = game.discount();

  auto improve = [&](const std::vector<double>& v) {
    std::vector<double> next(S, -std::numeric_limits<double>::infinity());
    std::vector<int> greedy(S, 0);
    for (int s = 0; s < S; ++s) {
      std::vector<double> q(n_own, 0.0);
      for (int a = 0; a < space.size(); ++a) {
        const double w = rest[static_cast<std::size_t>(s) * sub_size + proj[a]];
        if (w == 0.0) continue;
        const auto row = game.transition_row(s, a);
        double cont = 0.0;
        for (int t = 0; t < S; ++t) cont += row[t] * v[t];
        q[space.ActionOf(a, player)] +=
            w * (game.reward(player, s, a) + gamma * cont);
      }
      for (int b = 0; b < n_own; ++b) {
        if (q[b] > next[s]) {
          next[s] = q[b];
          greedy[s] = b;
        }
      }
    }
    return std::make_pair(next, greedy);
  };

  BestResponse out;
  out.choice = GreedyFixedPoint(S, improve);
  out.policy = replace_player(
      pi, player, PlayerPolicy::Deterministic(n_own, out.choice));
  out.value = evaluate_policy(game, player, out.policy).initial_value;
  return out;
}

BestResponse unrestricted_modification_response(const MarkovGame& game,
                                                int player,
                                                const JointPolicy& pi) {
  const auto& space = game.joint();
  const int S = game.num_states();
  const int n_own = space.action_count(player);
  const double gamma = game.discount();

  auto improve = [&](const std::vector<double>& v) {
    std::vector<double> next(S, 0.0);
    std::vector<int> greedy(static_cast<std::size_t>(S) * n_own, 0);
    for (int s = 0; s < S; ++s) {
      // value[rec][b]: mass-weighted return of playing b when recommended rec.
      std::vector<double> value(static_cast<std::size_t>(n_own) * n_own, 0.0);
      for (int a = 0; a < space.size(); ++a) {
        const double w = pi.prob(s, a);
        if (w == 0.0) continue;
        const int rec = space.ActionOf(a, player);
        for (int b = 0; b < n_own; ++b) {
          const int played = space.WithAction(a, player, b);
          const auto row = game.transition_row(s, played);
          double cont = 0.0;
          for (int t = 0; t < S; ++t) cont += row[t] * v[t];
          value[rec * n_own + b] +=
              w * (game.reward(player, s, played) + gamma * cont);
        }
      }
      for (int rec = 0; rec < n_own; ++rec) {
        int best = rec;
        for (int b = 0; b < n_own; ++b) {
          if (value[rec * n_own + b] > value[rec * n_own + best]) best = b;
        }
        greedy[static_cast<std::size_t>(s) * n_own + rec] = best;
        next[s] += value[rec * n_own + best];
      }
    }
    return std::make_pair(next, greedy);
  };

  BestResponse out;
  out.choice = GreedyFixedPoint(S, improve);
  StrategyModification phi{player, S, n_own, out.choice};
  out.policy = apply_modification(pi, phi);
  out.value = evaluate_policy(game, player, out.policy).initial_value;
  return out;
}

double zero_sum_value(const MarkovGame& game, const PlayerPolicy& mu,
                      const PlayerPolicy& nu) {
  if (!is_zero_sum(game)) {
    throw std::invalid_argument("zero_sum_value: game is not zero-sum encoded");
  }
  return evaluate_policy(game, 0, JointPolicy::Product(game.joint(), {mu, nu}))
      .initial_value;
}

double duality_gap(const MarkovGame& game,
                   const std::vector<PlayerPolicy>& max_policies,
                   const std::vector<PlayerPolicy>& min_policies,
                   const PlayerPolicy& mu, const PlayerPolicy& nu) {
  double best_max = -std::numeric_limits<double>::infinity();
  for (const auto& m : max_policies) {
    best_max = std::max(best_max, zero_sum_value(game, m, nu));
  }
  double best_min = std::numeric_limits<double>::infinity();
  for (const auto& n : min_policies) {
    best_min = std::min(best_min, zero_sum_value(game, mu, n));
  }
  return best_max - best_min;
}

}  // namespace bcel
