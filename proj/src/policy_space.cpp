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

#include "bcel/policy_space.hpp"

#include <cmath>
#include <stdexcept>

namespace bcel {

std::string to_string(Equilibrium eq) {
  switch (eq) {
    case Equilibrium::kNE:
      return "NE";
    case Equilibrium::kCE:
      return "CE";
    case Equilibrium::kCCE:
      return "CCE";
  }
  return "?";
}

Equilibrium parse_equilibrium(const std::string& name) {
  if (name == "NE" || name == "ne") return Equilibrium::kNE;
  if (name == "CE" || name == "ce") return Equilibrium::kCE;
  if (name == "CCE" || name == "cce") return Equilibrium::kCCE;
  throw std::invalid_argument("unknown equilibrium kind '" + name + "'");
}

namespace {

void CheckDistribution(std::span<const double> row, const char* what) {
  double total = 0.0;
  for (double p : row) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument(std::string(what) + ": negative probability");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kPolicyTolerance) {
    throw std::invalid_argument(std::string(what) +
                                ": row does not sum to one");
  }
}

bool TablesClose(const std::vector<double>& a, const std::vector<double>& b,
                 double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (std::abs(a[k] - b[k]) > tol) return false;
  }
  return true;
}

}  // namespace

PlayerPolicy PlayerPolicy::Deterministic(
    int num_actions, const std::vector<int>& action_per_state) {
  PlayerPolicy p;
  p.num_states = static_cast<int>(action_per_state.size());
  p.num_actions = num_actions;
  p.probs.assign(static_cast<std::size_t>(p.num_states) * num_actions, 0.0);
  for (int s = 0; s < p.num_states; ++s) {
    const int a = action_per_state[s];
    if (a < 0 || a >= num_actions) {
      throw std::out_of_range("PlayerPolicy::Deterministic: action out of range");
    }
    p.probs[static_cast<std::size_t>(s) * num_actions + a] = 1.0;
  }
  return p;
}

PlayerPolicy PlayerPolicy::Uniform(int num_states, int num_actions) {
  PlayerPolicy p;
  p.num_states = num_states;
  p.num_actions = num_actions;
  p.probs.assign(static_cast<std::size_t>(num_states) * num_actions,
                 1.0 / num_actions);
  return p;
}

bool PlayerPolicy::ApproxEqual(const PlayerPolicy& other, double tol) const {
  return num_states == other.num_states && num_actions == other.num_actions &&
         TablesClose(probs, other.probs, tol);
}

JointPolicy::JointPolicy(JointActionSpace space, int num_states,
                         std::vector<double> probs,
                         std::vector<PlayerPolicy> marginals)
    : space_(std::move(space)),
      num_states_(num_states),
      probs_(std::move(probs)),
      marginals_(std::move(marginals)) {}

JointPolicy JointPolicy::Product(const JointActionSpace& space,
                                 std::vector<PlayerPolicy> marginals) {
  if (static_cast<int>(marginals.size()) != space.num_players()) {
    throw std::invalid_argument("JointPolicy::Product: one factor per player");
  }
  const int num_states = marginals.front().num_states;
  for (int i = 0; i < space.num_players(); ++i) {
    const auto& m = marginals[i];
    if (m.num_states != num_states || m.num_actions != space.action_count(i) ||
        m.probs.size() != static_cast<std::size_t>(num_states) * m.num_actions) {
      throw std::invalid_argument("JointPolicy::Product: factor shape mismatch");
    }
    for (int s = 0; s < num_states; ++s) {
      CheckDistribution({m.probs.data() + static_cast<std::size_t>(s) *
                                              m.num_actions,
                         static_cast<std::size_t>(m.num_actions)},
                        "JointPolicy::Product");
    }
  }
  std::vector<double> probs(static_cast<std::size_t>(num_states) * space.size());
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < space.size(); ++a) {
      double p = 1.0;
      for (int i = 0; i < space.num_players(); ++i) {
        p *= marginals[i].prob(s, space.ActionOf(a, i));
      }
      probs[static_cast<std::size_t>(s) * space.size() + a] = p;
    }
  }
  return JointPolicy(space, num_states, std::move(probs), std::move(marginals));
}

JointPolicy JointPolicy::Correlated(const JointActionSpace& space,
                                    int num_states, std::vector<double> probs) {
  if (num_states <= 0 ||
      probs.size() != static_cast<std::size_t>(num_states) * space.size()) {
    throw std::invalid_argument("JointPolicy::Correlated: table has wrong size");
  }
  for (int s = 0; s < num_states; ++s) {
    CheckDistribution({probs.data() + static_cast<std::size_t>(s) * space.size(),
                       static_cast<std::size_t>(space.size())},
                      "JointPolicy::Correlated");
  }
  return JointPolicy(space, num_states, std::move(probs), {});
}

JointPolicy JointPolicy::Pure(const JointActionSpace& space, int num_states,
                              const std::vector<int>& actions) {
  std::vector<PlayerPolicy> marginals;
  for (int i = 0; i < space.num_players(); ++i) {
    marginals.push_back(PlayerPolicy::Deterministic(
        space.action_count(i), std::vector<int>(num_states, actions.at(i))));
  }
  return Product(space, std::move(marginals));
}

bool JointPolicy::ApproxEqual(const JointPolicy& other, double tol) const {
  return space_ == other.space_ && num_states_ == other.num_states_ &&
         TablesClose(probs_, other.probs_, tol);
}

StrategyModification StrategyModification::Identity(int player, int num_states,
                                                    int num_actions) {
  StrategyModification phi{player, num_states, num_actions, {}};
  phi.map.resize(static_cast<std::size_t>(num_states) * num_actions);
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_actions; ++a) {
      phi.map[static_cast<std::size_t>(s) * num_actions + a] = a;
    }
  }
  return phi;
}

StrategyModification StrategyModification::Swap(int player, int num_states,
                                                int num_actions, int s,
                                                int from, int to) {
  auto phi = Identity(player, num_states, num_actions);
  phi.map[static_cast<std::size_t>(s) * num_actions + from] = to;
  return phi;
}

std::vector<double> marginalize(const JointPolicy& policy,
                                std::span<const int> players) {
  const auto [map, sub_size] = policy.space().Projection(players);
  std::vector<double> out(static_cast<std::size_t>(policy.num_states()) *
                              sub_size,
                          0.0);
  for (int s = 0; s < policy.num_states(); ++s) {
    const auto row = policy.at(s);
    for (int a = 0; a < policy.num_joint_actions(); ++a) {
      out[static_cast<std::size_t>(s) * sub_size + map[a]] += row[a];
    }
  }
  return out;
}

PlayerPolicy player_marginal(const JointPolicy& policy, int player) {
  if (policy.is_product()) return policy.marginals()[player];
  const int players[] = {player};
  PlayerPolicy p;
  p.num_states = policy.num_states();
  p.num_actions = policy.space().action_count(player);
  p.probs = marginalize(policy, players);
  return p;
}

JointPolicy apply_modification(const JointPolicy& policy,
                               const StrategyModification& phi) {
  const auto& space = policy.space();
  const int i = phi.player;
  if (phi.num_states != policy.num_states() ||
      phi.num_actions != space.action_count(i)) {
    throw std::invalid_argument("apply_modification: shape mismatch");
  }
  std::vector<double> out(policy.table().size(), 0.0);
  for (int s = 0; s < policy.num_states(); ++s) {
    const auto row = policy.at(s);
    double* dst = out.data() + static_cast<std::size_t>(s) * space.size();
    for (int a = 0; a < space.size(); ++a) {
      if (row[a] == 0.0) continue;
      dst[space.WithAction(a, i, phi(s, space.ActionOf(a, i)))] += row[a];
    }
  }
  return JointPolicy::Correlated(space, policy.num_states(), std::move(out));
}

JointPolicy replace_player(const JointPolicy& policy, int player,
                           const PlayerPolicy& deviation) {
  const auto& space = policy.space();
  if (deviation.num_states != policy.num_states() ||
      deviation.num_actions != space.action_count(player)) {
    throw std::invalid_argument("replace_player: deviation shape mismatch");
  }
  if (policy.is_product() || space.num_players() == 2) {
    std::vector<PlayerPolicy> factors;
    for (int p = 0; p < space.num_players(); ++p) {
      factors.push_back(p == player ? deviation : player_marginal(policy, p));
    }
    return JointPolicy::Product(space, std::move(factors));
  }
  const auto others = space.Others(player);
  const auto rest = marginalize(policy, others);
  const auto [map, sub_size] = space.Projection(others);
  std::vector<double> out(policy.table().size());
  for (int s = 0; s < policy.num_states(); ++s) {
    for (int a = 0; a < space.size(); ++a) {
      out[static_cast<std::size_t>(s) * space.size() + a] =
          deviation.prob(s, space.ActionOf(a, player)) *
          rest[static_cast<std::size_t>(s) * sub_size + map[a]];
    }
  }
  return JointPolicy::Correlated(space, policy.num_states(), std::move(out));
}

PolicyClass PolicyClass::FromPolicies(std::vector<JointPolicy> policies) {
  if (policies.empty()) {
    throw std::invalid_argument("PolicyClass: class must be non-empty");
  }
  const auto& space = policies.front().space();
  const int num_states = policies.front().num_states();
  for (const auto& p : policies) {
    if (!(p.space() == space) || p.num_states() != num_states) {
      throw std::invalid_argument("PolicyClass: policies differ in shape");
    }
  }
  PolicyClass cls;
  cls.deviations.resize(space.num_players());
  cls.modifications.resize(space.num_players());
  for (int i = 0; i < space.num_players(); ++i) {
    for (const auto& pi : policies) {
      auto marginal = player_marginal(pi, i);
      bool seen = false;
      for (const auto& d : cls.deviations[i]) {
        if (d.ApproxEqual(marginal)) {
          seen = true;
          break;
        }
      }
      if (!seen) cls.deviations[i].push_back(std::move(marginal));
    }
    const int n_actions = space.action_count(i);
    cls.modifications[i].push_back(
        StrategyModification::Identity(i, num_states, n_actions));
    for (int s = 0; s < num_states; ++s) {
      for (int from = 0; from < n_actions; ++from) {
        for (int to = 0; to < n_actions; ++to) {
          if (from == to) continue;
          cls.modifications[i].push_back(StrategyModification::Swap(
              i, num_states, n_actions, s, from, to));
        }
      }
    }
  }
  cls.policies = std::move(policies);
  return cls;
}

PolicyClass PolicyClass::ProductOf(
    const JointActionSpace& space,
    const std::vector<std::vector<PlayerPolicy>>& per_player) {
  if (static_cast<int>(per_player.size()) != space.num_players()) {
    throw std::invalid_argument("PolicyClass::ProductOf: one list per player");
  }
  std::vector<JointPolicy> policies;
  std::vector<int> idx(per_player.size(), 0);
  while (true) {
    std::vector<PlayerPolicy> factors;
    for (std::size_t p = 0; p < per_player.size(); ++p) {
      factors.push_back(per_player[p].at(idx[p]));
    }
    policies.push_back(JointPolicy::Product(space, std::move(factors)));
    int p = static_cast<int>(per_player.size()) - 1;
    while (p >= 0 && ++idx[p] == static_cast<int>(per_player[p].size())) {
      idx[p] = 0;
      --p;
    }
    if (p < 0) break;
  }
  return FromPolicies(std::move(policies));
}

ResponseClass response_class(const JointPolicy& policy, int player,
                             Equilibrium eq, const PolicyClass& cls) {
  ResponseClass out{player, eq, {}};
  switch (eq) {
    case Equilibrium::kNE:
      if (!policy.is_product()) {
        throw std::invalid_argument(
            "response_class: NE deviations require a product policy");
      }
      [[fallthrough]];
    case Equilibrium::kCCE:
      for (const auto& dev : cls.deviations.at(player)) {
        out.members.push_back(replace_player(policy, player, dev));
      }
      break;
    case Equilibrium::kCE:
      for (const auto& phi : cls.modifications.at(player)) {
        out.members.push_back(apply_modification(policy, phi));
      }
      break;
  }
  return out;
}

namespace {

int FindOrInsert(std::vector<JointPolicy>& list, const JointPolicy& p) {
  for (std::size_t k = 0; k < list.size(); ++k) {
    if (list[k].ApproxEqual(p)) return static_cast<int>(k);
  }
  list.push_back(p);
  return static_cast<int>(list.size()) - 1;
}

}  // namespace

ExtendedClass extended_class(const PolicyClass& cls, Equilibrium eq) {
  ExtendedClass ext;
  ext.kind = eq;
  const int m = cls.policies.front().space().num_players();
  ext.players.resize(m);
  for (int i = 0; i < m; ++i) {
    auto& pp = ext.players[i];
    for (const auto& pi : cls.policies) {
      pp.base_index.push_back(FindOrInsert(pp.policies, pi));
    }
    pp.response_index.resize(cls.policies.size());
    for (std::size_t k = 0; k < cls.policies.size(); ++k) {
      const auto& pi = cls.policies[k];
      if (eq == Equilibrium::kNE && !pi.is_product()) continue;
      for (const auto& member : response_class(pi, i, eq, cls).members) {
        pp.response_index[k].push_back(FindOrInsert(pp.policies, member));
      }
    }
  }
  for (auto& pp : ext.players) {
    for (const auto& p : pp.policies) {
      pp.global_index.push_back(FindOrInsert(ext.all, p));
    }
  }
  return ext;
}

}  // namespace bcel
