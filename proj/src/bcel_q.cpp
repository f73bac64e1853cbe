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

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bcel/exact_oracle.hpp"
#include "bcel/random.hpp"

namespace bcel {
double empirical_loss(const MarkovGame& game, const OfflineDataset& data,
                      int player, const Table& f_prime, const Table& f,
                      const JointPolicy& pi) {
  const auto next = state_values(f, pi);
  const int A = game.num_joint_actions();
  double total = 0.0;
  for (int k = 0; k < data.size(); ++k) {
    const double pred =
        f_prime[static_cast<std::size_t>(data.state(k)) * A + data.action(k)];
    const double res = pred - data.reward(k, player) -
                       game.discount() * next[data.next_state(k)];
    total += res * res;
  }
  return total / data.size();
}

double empirical_bellman_error(const MarkovGame& game,
                               const OfflineDataset& data, int player,
                               const Table& f, const JointPolicy& pi,
                               const FunctionClass& cls) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& g : cls.candidates) {
    best = std::min(best, empirical_loss(game, data, player, g, f, pi));
  }
  return std::max(0.0, empirical_loss(game, data, player, f, f, pi) - best);
}

EmpiricalBellman::EmpiricalBellman(const MarkovGame& game,
                                   const OfflineDataset& data)
    : discount_(game.discount()), stats_(data) {}

std::vector<EmpiricalBellman::CellMoments> EmpiricalBellman::Moments(
    int player, const std::vector<double>& next,
    const std::vector<double>* weights) const {
  const int S = stats_.num_states;
  const int A = stats_.num_joint_actions;
  const std::size_t off = stats_.player_offset(player);
  std::vector<CellMoments> out;
  out.reserve(stats_.observed_cells.size());
  for (int cell : stats_.observed_cells) {
    const int s = cell / A;
    const int a = cell % A;
    const double w = weights ? (*weights)[cell] : 1.0;
    double count = 0.0;
    double first = 0.0;
    double second = 0.0;
    for (int t = 0; t < S; ++t) {
      const auto idx = stats_.index(s, a, t);
      const double c = stats_.count[idx];
      if (c == 0.0) continue;
      const double z = discount_ * next[t];
      const double rs = stats_.reward_sum[off + idx];
      count += c;
      first += rs + c * z;
      second += stats_.reward_sq[off + idx] + 2.0 * z * rs + c * z * z;
    }
    out.push_back({cell, w * count, w * first, w * second});
  }
  return out;
}

// Centered form: sum_c W_c (p_c - mean_c)^2 / n. The within-cell variance is
// common to every prediction p and cancels in E, so it is left out here and
// added back by losses().
double EmpiricalBellman::Loss(const std::vector<CellMoments>& moments,
                              const Table& pred, FunctionKind kind) const {
  const int A = stats_.num_joint_actions;
  double total = 0.0;
  for (const auto& m : moments) {
    if (m.weight == 0.0) continue;
    const double p = kind == FunctionKind::kQ ? pred[m.cell] : pred[m.cell / A];
    const double d = p - m.first / m.weight;
    total += m.weight * d * d;
  }
  return total / stats_.n;
}

std::vector<double> EmpiricalBellman::losses(
    int player, const Table& f, const JointPolicy& pi, const FunctionClass& cls,
    const std::vector<double>* cell_weights) const {
  const auto next = cls.kind == FunctionKind::kQ ? state_values(f, pi) : f;
  const auto moments = Moments(player, next, cell_weights);
  double variance = 0.0;
  for (const auto& m : moments) {
    if (m.weight == 0.0) continue;
    variance += std::max(0.0, m.second - m.first * m.first / m.weight);
  }
  variance /= stats_.n;
  std::vector<double> out;
  out.reserve(cls.candidates.size());
  for (const auto& g : cls.candidates) {
    out.push_back(Loss(moments, g, cls.kind) + variance);
  }
  return out;
}

double EmpiricalBellman::bellman_error(
    int player, const Table& f, const JointPolicy& pi, const FunctionClass& cls,
    const std::vector<double>* cell_weights) const {
  const auto next = cls.kind == FunctionKind::kQ ? state_values(f, pi) : f;
  const auto moments = Moments(player, next, cell_weights);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& g : cls.candidates) {
    best = std::min(best, Loss(moments, g, cls.kind));
  }
  return std::max(0.0, Loss(moments, f, cls.kind) - best);
}

std::vector<double> EmpiricalBellman::bellman_errors(
    int player, const JointPolicy& pi, const FunctionClass& cls,
    const std::vector<double>* cell_weights) const {
  std::vector<double> out(cls.candidates.size());
  if (discount_ == 0.0) {
    // The regression target does not depend on the candidate.
    const auto moments =
        Moments(player, std::vector<double>(stats_.num_states, 0.0),
                cell_weights);
    std::vector<double> loss(cls.candidates.size());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < loss.size(); ++k) {
      loss[k] = Loss(moments, cls.candidates[k], cls.kind);
      best = std::min(best, loss[k]);
    }
    for (std::size_t k = 0; k < loss.size(); ++k) {
      out[k] = std::max(0.0, loss[k] - best);
    }
    return out;
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = bellman_error(player, cls.candidates[k], pi, cls, cell_weights);
  }
  return out;
}

double threshold_epsilon_v(int n, double class_total, double ext_size,
                           double delta, double v_max, double eps_f,
                           double stat_constant, double approx_constant) {
  if (n < 1) throw std::invalid_argument("threshold_epsilon_v: n must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("threshold_epsilon_v: delta must be in (0, 1)");
  }
  return stat_constant * v_max * v_max * std::log(class_total * ext_size / delta) /
             n +
         approx_constant * eps_f;
}

double resolve_threshold(const ThresholdRule& rule, int n, double class_total,
                         double ext_size, double v_max, double weight_bound) {
  switch (rule.mode) {
    case ThresholdMode::kPaper:
      return threshold_epsilon_v(n, class_total, ext_size, rule.delta,
                                 v_max * std::sqrt(weight_bound), rule.eps_f);
    case ThresholdMode::kOverride:
      return threshold_epsilon_v(n, class_total, ext_size, rule.delta,
                                 v_max * std::sqrt(weight_bound), rule.eps_f,
                                 rule.stat_constant, rule.approx_constant);
    case ThresholdMode::kCalibrated:
    case ThresholdMode::kFixed:
      return rule.value;
  }
  return rule.value;
}

VersionSpace build_version_space(int player, int policy,
                                 std::vector<double> errors, double eps) {
  if (!(eps >= 0.0)) {
    throw std::invalid_argument("build_version_space: threshold must be >= 0");
  }
  VersionSpace vs;
  vs.player = player;
  vs.policy = policy;
  vs.threshold = eps;
  double min_error = std::numeric_limits<double>::infinity();
  for (double e : errors) min_error = std::min(min_error, e);
  vs.effective = std::max(eps, min_error);
  for (std::size_t k = 0; k < errors.size(); ++k) {
    if (errors[k] <= vs.effective) vs.members.push_back(static_cast<int>(k));
  }
  vs.errors = std::move(errors);
  return vs;
}

namespace {

double Predict(const FunctionClass& cls, int k, const JointPolicy& pi, int s0) {
  const auto& f = cls.candidates[k];
  return cls.kind == FunctionKind::kQ ? value_at(f, pi, s0) : f[s0];
}

}  // namespace

Evaluation optimistic_value(const VersionSpace& vs, const FunctionClass& cls,
                            const JointPolicy& pi, int s0) {
  if (vs.members.empty()) {
    throw std::logic_error("optimistic_value: empty version space");
  }
  Evaluation best{-std::numeric_limits<double>::infinity(), -1};
  for (int k : vs.members) {
    const double v = Predict(cls, k, pi, s0);
    if (v > best.value) best = {v, k};
  }
  return best;
}

Evaluation pessimistic_value(const VersionSpace& vs, const FunctionClass& cls,
                             const JointPolicy& pi, int s0) {
  if (vs.members.empty()) {
    throw std::logic_error("pessimistic_value: empty version space");
  }
  Evaluation best{std::numeric_limits<double>::infinity(), -1};
  for (int k : vs.members) {
    const double v = Predict(cls, k, pi, s0);
    if (v < best.value) best = {v, k};
  }
  return best;
}

GapReport assemble_gap_report(const ExtendedClass& ext,
                              const IntervalTable& intervals) {
  GapReport report;
  const int num_policies =
      static_cast<int>(ext.players.front().base_index.size());
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < num_policies; ++k) {
    PolicyGapEntry entry;
    entry.policy = k;
    entry.eligible = ext.has_response(k);
    if (entry.eligible) {
      entry.estimated_gap = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < ext.num_players(); ++i) {
        const auto& pp = ext.players[i];
        const double lower = intervals[i][pp.base_index[k]].lower;
        entry.lower.push_back(lower);
        std::vector<double> upper;
        for (std::size_t j = 0; j < pp.response_index[k].size(); ++j) {
          upper.push_back(intervals[i][pp.response_index[k][j]].upper);
          if (upper.back() - lower > entry.estimated_gap) {
            entry.estimated_gap = upper.back() - lower;
            entry.argmax_player = i;
            entry.argmax_member = static_cast<int>(j);
          }
        }
        entry.deviation_upper.push_back(std::move(upper));
      }
      if (entry.estimated_gap < best) {
        best = entry.estimated_gap;
        report.selected = k;
      }
    }
    report.entries.push_back(std::move(entry));
  }
  if (report.selected < 0) {
    throw std::invalid_argument(
        "assemble_gap_report: no class member has a response class (NE needs "
        "a product policy)");
  }
  for (const auto& e : report.entries) {
    if (e.eligible && e.estimated_gap == best) report.ties.push_back(e.policy);
  }
  return report;
}

double total_class_size(const std::vector<FunctionClass>& classes) {
  double total = 0.0;
  for (const auto& c : classes) total += c.size();
  return total;
}

BcelResult run_bcel(const MarkovGame& game, const ExtendedClass& ext,
                    const std::vector<FunctionClass>& classes,
                    const OfflineDataset& data, const BcelConfig& config) {
  if (ext.kind != config.eq) {
    throw std::invalid_argument("run_bcel: extended class built for " +
                                to_string(ext.kind));
  }
  BcelResult out;
  out.threshold = resolve_threshold(config.threshold, data.size(),
                                    total_class_size(classes),
                                    static_cast<double>(ext.all.size()),
                                    game.v_max());
  const double slack = kBellmanErrorSlack * game.v_max() * game.v_max();
  const EmpiricalBellman eb(game, data);
  out.intervals.resize(ext.num_players());
  out.spaces.resize(ext.num_players());
  for (int i = 0; i < ext.num_players(); ++i) {
    const auto& cls = classes.at(i);
    if (cls.kind != FunctionKind::kQ) {
      throw std::invalid_argument("run_bcel: needs Q-function classes");
    }
    const auto& policies = ext.players[i].policies;
    for (int k = 0; k < static_cast<int>(policies.size()); ++k) {
      auto vs = build_version_space(i, k, eb.bellman_errors(i, policies[k], cls),
                                    out.threshold + slack);
      vs.threshold = out.threshold;
      const auto hi = optimistic_value(vs, cls, policies[k], game.initial_state());
      const auto lo = pessimistic_value(vs, cls, policies[k], game.initial_state());
      out.intervals[i].push_back({hi.value, lo.value, hi.candidate, lo.candidate,
                                  static_cast<int>(vs.members.size()),
                                  out.threshold, false});
      out.spaces[i].push_back(std::move(vs));
    }
  }
  out.report = assemble_gap_report(ext, out.intervals);
  return out;
}

PolicyGapEntry estimated_gap(const BcelResult& result, int policy) {
  return result.report.entries.at(policy);
}

std::vector<std::vector<Table>> exact_q_tables(const MarkovGame& game,
                                               const ExtendedClass& ext) {
  std::vector<std::vector<Table>> out(ext.num_players());
  for (int i = 0; i < ext.num_players(); ++i) {
    for (const auto& pi : ext.players[i].policies) {
      out[i].push_back(evaluate_policy(game, i, pi).q);
    }
  }
  return out;
}

namespace {

double Quantile(std::vector<double> samples, double level) {
  std::sort(samples.begin(), samples.end());
  auto rank = static_cast<std::size_t>(std::ceil(level * samples.size()));
  rank = std::clamp<std::size_t>(rank, 1, samples.size());
  return samples[rank - 1];
}

}  // namespace

double calibrate_threshold(const MarkovGame& game, const ExtendedClass& ext,
                           const std::vector<FunctionClass>& classes,
                           const DataDistribution& dist, int n, double delta,
                           int pilots, std::uint64_t seed) {
  if (pilots < 1) throw std::invalid_argument("calibrate_threshold: pilots < 1");
  const auto q = exact_q_tables(game, ext);
  const Rng master(seed);
  std::vector<double> samples;
  for (int p = 0; p < pilots; ++p) {
    const auto data = sample_dataset(game, dist, n, master.Derive(p).key());
    const EmpiricalBellman eb(game, data);
    double worst = 0.0;
    for (int i = 0; i < ext.num_players(); ++i) {
      for (std::size_t k = 0; k < q[i].size(); ++k) {
        worst = std::max(worst, eb.bellman_error(i, q[i][k],
                                                 ext.players[i].policies[k],
                                                 classes.at(i)));
      }
    }
    samples.push_back(worst);
  }
  return Quantile(std::move(samples), 1.0 - delta);
}

}  // namespace bcel
