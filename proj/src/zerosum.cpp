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
#include <limits>
#include <stdexcept>

#include "bcel/exact_oracle.hpp"

namespace bcel {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double MaxUpperOverRows(const PayoffIntervalTable& t, int nu) {
  double best = -kInf;
  for (int mu = 0; mu < t.rows; ++mu) best = std::max(best, t.Upper(mu, nu));
  return best;
}

double MinLowerOverCols(const PayoffIntervalTable& t, int mu) {
  double best = kInf;
  for (int nu = 0; nu < t.cols; ++nu) best = std::min(best, t.Lower(mu, nu));
  return best;
}

void CheckShape(const MarkovGame& game,
                const std::vector<PlayerPolicy>& max_policies,
                const std::vector<PlayerPolicy>& min_policies) {
  if (game.num_players() != 2) {
    throw std::invalid_argument("zero-sum tables need a two-player game");
  }
  if (max_policies.empty() || min_policies.empty()) {
    throw std::invalid_argument("zero-sum tables need non-empty policy sets");
  }
}

}  // namespace

PolicyClass zero_sum_class(const MarkovGame& game,
                           const std::vector<PlayerPolicy>& max_policies,
                           const std::vector<PlayerPolicy>& min_policies) {
  CheckShape(game, max_policies, min_policies);
  return PolicyClass::ProductOf(game.joint(), {max_policies, min_policies});
}

PayoffIntervalTable exact_interval_table(
    const MarkovGame& game, const std::vector<PlayerPolicy>& max_policies,
    const std::vector<PlayerPolicy>& min_policies) {
  CheckShape(game, max_policies, min_policies);
  PayoffIntervalTable t;
  t.rows = static_cast<int>(max_policies.size());
  t.cols = static_cast<int>(min_policies.size());
  for (const auto& mu : max_policies) {
    for (const auto& nu : min_policies) {
      t.exact.push_back(zero_sum_value(game, mu, nu));
    }
  }
  t.upper = t.exact;
  t.lower = t.exact;
  return t;
}

PayoffIntervalTable build_interval_table(
    const MarkovGame& game, const std::vector<PlayerPolicy>& max_policies,
    const std::vector<PlayerPolicy>& min_policies,
    const std::vector<FunctionClass>& classes, const OfflineDataset& data,
    const ThresholdRule& threshold, BcelResult* result) {
  if (!is_zero_sum(game, 1e-12)) {
    throw std::invalid_argument("build_interval_table: game is not zero-sum");
  }
  auto t = exact_interval_table(game, max_policies, min_policies);
  const auto cls = zero_sum_class(game, max_policies, min_policies);
  const auto ext = extended_class(cls, Equilibrium::kNE);
  auto run = run_bcel(game, ext, classes, data, {Equilibrium::kNE, threshold});
  const double v_max = game.v_max();
  for (int k = 0; k < cls.size(); ++k) {
    const auto& first = run.intervals[0][ext.players[0].base_index[k]];
    const auto& second = run.intervals[1][ext.players[1].base_index[k]];
    t.upper[k] = first.upper;
    t.lower[k] = first.lower;
    t.mirror_error =
        std::max({t.mirror_error, std::abs(first.upper - (v_max - second.lower)),
                  std::abs(first.lower - (v_max - second.upper))});
  }
  if (result) *result = std::move(run);
  return t;
}

double objective_J(const PayoffIntervalTable& t, int mu, int nu) {
  return MaxUpperOverRows(t, nu) - MinLowerOverCols(t, mu);
}

double table_duality_gap(const PayoffIntervalTable& t, int mu, int nu) {
  double best_row = -kInf;
  for (int m = 0; m < t.rows; ++m) best_row = std::max(best_row, t.V(m, nu));
  double best_col = kInf;
  for (int c = 0; c < t.cols; ++c) best_col = std::min(best_col, t.V(mu, c));
  return best_row - best_col;
}

ZeroSumSelection select_independent(const PayoffIntervalTable& t) {
  ZeroSumSelection sel;
  double best_mu = -kInf;
  for (int mu = 0; mu < t.rows; ++mu) {
    const double v = MinLowerOverCols(t, mu);
    if (v > best_mu) {
      best_mu = v;
      sel.mu = mu;
    }
  }
  double best_nu = kInf;
  for (int nu = 0; nu < t.cols; ++nu) {
    const double v = MaxUpperOverRows(t, nu);
    if (v < best_nu) {
      best_nu = v;
      sel.nu = nu;
    }
  }
  sel.objective = objective_J(t, sel.mu, sel.nu);
  return sel;
}

ZeroSumSelection joint_argmin_J(const PayoffIntervalTable& t) {
  ZeroSumSelection sel{0, 0, kInf};
  for (int mu = 0; mu < t.rows; ++mu) {
    for (int nu = 0; nu < t.cols; ++nu) {
      const double j = objective_J(t, mu, nu);
      if (j < sel.objective) sel = {mu, nu, j};
    }
  }
  return sel;
}

double separable_min_J(const PayoffIntervalTable& t) {
  double min_upper = kInf;
  for (int nu = 0; nu < t.cols; ++nu) {
    min_upper = std::min(min_upper, MaxUpperOverRows(t, nu));
  }
  double max_lower = -kInf;
  for (int mu = 0; mu < t.rows; ++mu) {
    max_lower = std::max(max_lower, MinLowerOverCols(t, mu));
  }
  return min_upper - max_lower;
}

ZeroSumSelection exact_equilibrium(const PayoffIntervalTable& t) {
  ZeroSumSelection sel{0, 0, kInf};
  for (int mu = 0; mu < t.rows; ++mu) {
    for (int nu = 0; nu < t.cols; ++nu) {
      const double g = table_duality_gap(t, mu, nu);
      if (g < sel.objective) sel = {mu, nu, g};
    }
  }
  return sel;
}

PropositionBound proposition_bound(const PayoffIntervalTable& t, int mu_star,
                                   int nu_star) {
  PropositionBound out;
  out.reference_gap = table_duality_gap(t, mu_star, nu_star);
  const double best_upper = MaxUpperOverRows(t, nu_star);
  const double best_lower = MinLowerOverCols(t, mu_star);
  // The objective splits into a mu~ part and a nu~ part.
  double mu_part = kInf;
  for (int mu = 0; mu < t.rows; ++mu) {
    const double v = t.Width(mu, nu_star) + best_upper - t.Upper(mu, nu_star);
    if (v < mu_part) {
      mu_part = v;
      out.mu_tilde = mu;
    }
  }
  double nu_part = kInf;
  for (int nu = 0; nu < t.cols; ++nu) {
    const double v = t.Width(mu_star, nu) + t.Lower(mu_star, nu) - best_lower;
    if (v < nu_part) {
      nu_part = v;
      out.nu_tilde = nu;
    }
  }
  out.rhs = mu_part + nu_part;
  return out;
}

double sum_form_gap(const MarkovGame& game, const PolicyClass& cls,
                    const JointPolicy& pi) {
  const auto gap = true_gap(game, cls, pi, Equilibrium::kNE);
  double total = 0.0;
  for (const auto& p : gap.players) total += p.gain();
  return total;
}

}  // namespace bcel
