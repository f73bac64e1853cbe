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

#include "bcel/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bcel {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Table DataTable(const DataDistribution& dist, FunctionKind kind) {
  return kind == FunctionKind::kQ ? dist.table() : dist.state_marginal();
}

Table TargetTable(const MarkovGame& game, const JointPolicy& pi,
                  FunctionKind kind) {
  auto d = occupancy(game, pi);
  return kind == FunctionKind::kQ ? d : state_marginal(d, game.num_states());
}

}  // namespace

double interval_width(const VersionSpace& vs, const FunctionClass& cls,
                      const JointPolicy& pi, int s0) {
  return optimistic_value(vs, cls, pi, s0).value -
         pessimistic_value(vs, cls, pi, s0).value;
}

double subopt(const std::vector<double>& uppers, int member) {
  return *std::max_element(uppers.begin(), uppers.end()) - uppers.at(member);
}

BoundBreakdown bound_breakdown(const ExtendedClass& ext,
                               const IntervalTable& intervals, int policy) {
  if (!ext.has_response(policy)) {
    throw std::invalid_argument("bound_breakdown: no response class for member " +
                                std::to_string(policy));
  }
  BoundBreakdown out;
  out.policy = policy;
  out.adaptive = -kInf;
  out.unilateral = -kInf;
  for (int i = 0; i < ext.num_players(); ++i) {
    const auto& pp = ext.players[i];
    PlayerBoundTerms t;
    t.base_width = intervals[i][pp.base_index[policy]].width();
    std::vector<double> uppers;
    for (int j : pp.response_index[policy]) {
      uppers.push_back(intervals[i][j].upper);
      t.member_width.push_back(intervals[i][j].width());
    }
    t.adaptive = kInf;
    t.unilateral = -kInf;
    for (std::size_t j = 0; j < uppers.size(); ++j) {
      t.member_subopt.push_back(subopt(uppers, static_cast<int>(j)));
      t.member_sum.push_back(t.member_width[j] + t.base_width +
                             t.member_subopt[j]);
      if (t.member_sum[j] < t.adaptive) {
        t.adaptive = t.member_sum[j];
        t.best_member = static_cast<int>(j);
      }
      t.unilateral = std::max(t.unilateral, t.member_width[j] + t.base_width);
    }
    out.adaptive = std::max(out.adaptive, t.adaptive);
    out.unilateral = std::max(out.unilateral, t.unilateral);
    out.players.push_back(std::move(t));
  }
  return out;
}

bool sandwich_event(const MarkovGame& game, const ExtendedClass& ext,
                    const IntervalTable& intervals, double tol) {
  for (int i = 0; i < ext.num_players(); ++i) {
    const auto& policies = ext.players[i].policies;
    for (std::size_t k = 0; k < policies.size(); ++k) {
      const double v = evaluate_policy(game, i, policies[k]).initial_value;
      if (v < intervals[i][k].lower - tol || v > intervals[i][k].upper + tol) {
        return false;
      }
    }
  }
  return true;
}

std::vector<double> exact_gaps(const MarkovGame& game, const PolicyClass& cls,
                               Equilibrium eq) {
  std::vector<double> out;
  for (const auto& pi : cls.policies) {
    if (eq == Equilibrium::kNE && !pi.is_product()) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    out.push_back(true_gap(game, cls, pi, eq).gap);
  }
  return out;
}

int upper_bound_violations(const std::vector<double>& gaps,
                           const GapReport& report, double tol) {
  int count = 0;
  for (const auto& e : report.entries) {
    if (e.eligible && gaps.at(e.policy) > e.estimated_gap + tol) ++count;
  }
  return count;
}

std::vector<TheoremCheck> theorem_checks(const MarkovGame& game,
                                         const ExtendedClass& ext,
                                         const BcelResult& result,
                                         const std::vector<double>& gaps,
                                         double eps_f, double tol) {
  std::vector<TheoremCheck> out;
  const double approx = 4.0 * std::sqrt(eps_f) / (1.0 - game.discount());
  const double selected = gaps.at(result.selected());
  for (const auto& e : result.report.entries) {
    if (!e.eligible) continue;
    TheoremCheck c;
    c.comparator = e.policy;
    c.selected_gap = selected;
    c.comparator_gap = gaps.at(e.policy);
    c.approx_term = approx;
    c.adaptive = bound_breakdown(ext, result.intervals, e.policy).adaptive;
    c.rhs = c.comparator_gap + approx + c.adaptive;
    c.holds = c.selected_gap <= c.rhs + tol;
    out.push_back(c);
  }
  return out;
}

std::vector<std::pair<std::string, Table>> probe_distributions(
    const MarkovGame& game, const JointPolicy& pi, const DataDistribution& dist,
    FunctionKind kind) {
  const auto target = TargetTable(game, pi, kind);
  const auto data = DataTable(dist, kind);
  std::vector<std::pair<std::string, Table>> out;
  out.emplace_back("d_pi", target);
  out.emplace_back("d_D", data);
  for (double alpha : {0.25, 0.5, 0.75}) {
    Table mix(target.size());
    for (std::size_t k = 0; k < mix.size(); ++k) {
      mix[k] = alpha * target[k] + (1.0 - alpha) * data[k];
    }
    out.emplace_back("mix_" + std::to_string(alpha).substr(0, 4), mix);
  }
  return out;
}

WidthBound width_bound(const MarkovGame& game, const FunctionClass& cls,
                       const JointPolicy& pi, const VersionSpace& vs,
                       const DataDistribution& dist,
                       const WidthBoundInputs& inputs) {
  const int s0 = game.initial_state();
  const auto hi = optimistic_value(vs, cls, pi, s0);
  const auto lo = pessimistic_value(vs, cls, pi, s0);
  WidthBound out;
  out.width = hi.value - lo.value;
  const auto& f_max = cls.candidates[hi.candidate];
  const auto& f_min = cls.candidates[lo.candidate];
  Table diff(f_max.size());
  for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = f_max[k] - f_min[k];

  const double gamma = game.discount();
  Table step(diff.size());
  if (cls.kind == FunctionKind::kQ) {
    const auto next = expected_next_value(game, pi, diff);
    for (std::size_t k = 0; k < diff.size(); ++k) {
      step[k] = diff[k] - gamma * next[k];
    }
  } else {
    // Transition term as printed for state-value classes, reward included.
    for (int s = 0; s < game.num_states(); ++s) {
      double p = 0.0;
      for (int a = 0; a < game.num_joint_actions(); ++a) {
        const double w = pi.prob(s, a);
        if (w == 0.0) continue;
        double e = game.reward(cls.player, s, a);
        for (int t = 0; t < game.num_states(); ++t) {
          e += game.transition(s, a, t) * diff[t];
        }
        p += w * e;
      }
      step[s] = diff[s] - gamma * p;
    }
  }

  const double unit =
      game.v_max() * std::sqrt(inputs.c_a *
                               std::log(inputs.class_total * inputs.ext_size /
                                        inputs.delta) /
                               inputs.n) +
      std::sqrt(inputs.eps_f + inputs.eps_ff);
  out.eps_apx = inputs.constant * unit;
  const auto target = TargetTable(game, pi, cls.kind);
  const auto data = DataTable(dist, cls.kind);
  out.rhs = kInf;
  out.needed_constant = kInf;
  for (auto& [name, d] : probe_distributions(game, pi, dist, cls.kind)) {
    ProbeTerms p;
    p.name = name;
    p.coverage = coverage_coefficient(game, pi, cls, d, data);
    p.mismatch = std::sqrt(p.coverage) * out.eps_apx / (1.0 - gamma);
    double off = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) {
      off += std::max(target[k] - d[k], 0.0) * step[k];
    }
    p.off_support = off / (1.0 - gamma);
    p.rhs = p.mismatch + p.off_support;
    const double per_unit = std::sqrt(p.coverage) * unit / (1.0 - gamma);
    if (out.width <= p.off_support) {
      p.needed_constant = 0.0;
    } else if (per_unit > 0.0 && std::isfinite(per_unit)) {
      p.needed_constant = (out.width - p.off_support) / per_unit;
    } else {
      p.needed_constant = kInf;
    }
    if (p.rhs < out.rhs) {
      out.rhs = p.rhs;
      out.best_probe = static_cast<int>(out.probes.size());
    }
    out.needed_constant = std::min(out.needed_constant, p.needed_constant);
    out.probes.push_back(std::move(p));
  }
  return out;
}

double unilateral_coefficient(const MarkovGame& game, const ExtendedClass& ext,
                              const std::vector<FunctionClass>& classes,
                              const DataDistribution& dist, int policy) {
  if (!ext.has_response(policy)) {
    throw std::invalid_argument("unilateral_coefficient: no response class");
  }
  double worst = 1.0;
  for (int i = 0; i < ext.num_players(); ++i) {
    const auto& pp = ext.players[i];
    const auto& cls = classes.at(i);
    const auto& base = pp.policies[pp.base_index[policy]];
    const auto data = DataTable(dist, cls.kind);
    for (int j : pp.response_index[policy]) {
      const auto d = TargetTable(game, pp.policies[j], cls.kind);
      worst = std::max(worst, coverage_coefficient(game, base, cls, d, data));
    }
  }
  return worst;
}

double self_coverage(const MarkovGame& game, const ExtendedClass& ext,
                     const FunctionClass& cls, const DataDistribution& dist,
                     int policy) {
  const auto& pp = ext.players.at(cls.player);
  const auto& pi = pp.policies[pp.base_index.at(policy)];
  return coverage_coefficient(game, pi, cls, TargetTable(game, pi, cls.kind),
                              DataTable(dist, cls.kind));
}

double unilateral_kappa(double selected_gap, double coefficient, int n,
                        double class_total, double ext_size, double delta,
                        double v_max, double discount) {
  const double scale = v_max / (1.0 - discount) *
                       std::sqrt(coefficient *
                                 std::log(class_total * ext_size / delta) / n);
  if (!std::isfinite(scale) || scale <= 0.0) return 0.0;
  return selected_gap / scale;
}

CompletenessGap strategy_completeness_gap(const MarkovGame& game,
                                          const PolicyClass& cls,
                                          const JointPolicy& pi,
                                          Equilibrium eq) {
  const auto in_class = true_gap(game, cls, pi, eq);
  CompletenessGap out;
  out.class_gap = in_class.gap;
  for (int i = 0; i < game.num_players(); ++i) {
    const auto best = eq == Equilibrium::kCE
                          ? unrestricted_modification_response(game, i, pi)
                          : unrestricted_best_response(game, i, pi);
    const auto& dev = in_class.players[i];
    out.eps_pi = std::max(out.eps_pi, best.value - dev.best_value);
    out.unrestricted_gap =
        std::max(out.unrestricted_gap, best.value - dev.base_value);
  }
  return out;
}

}  // namespace bcel
