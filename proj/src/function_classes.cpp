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

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bcel/exact_oracle.hpp"
#include "bcel/random.hpp"
#include "json.hpp"

namespace bcel {

void FunctionClass::Validate() const {
  if (candidates.empty()) {
    throw std::invalid_argument("FunctionClass: class must be non-empty");
  }
  for (const auto& f : candidates) {
    if (f.size() != table_size()) {
      throw std::invalid_argument("FunctionClass: candidate has wrong shape");
    }
    for (double x : f) {
      if (!(x >= 0.0 && x <= v_max + 1e-9)) {
        throw std::invalid_argument("FunctionClass: entry outside [0, v_max]");
      }
    }
  }
}

namespace {

FunctionClass Empty(const MarkovGame& game, int player, FunctionKind kind) {
  FunctionClass cls;
  cls.player = player;
  cls.kind = kind;
  cls.num_states = game.num_states();
  cls.num_joint_actions = game.num_joint_actions();
  cls.v_max = game.v_max();
  return cls;
}

}  // namespace

FunctionClass build_grid_class(const MarkovGame& game, int player,
                               FunctionKind kind, double grid_step,
                               std::size_t cap) {
  if (!(grid_step > 0.0)) {
    throw std::invalid_argument("build_grid_class: grid_step must be > 0");
  }
  auto cls = Empty(game, player, kind);
  std::vector<double> levels;
  for (int k = 0; k * grid_step < cls.v_max - 1e-12; ++k) {
    levels.push_back(k * grid_step);
  }
  levels.push_back(cls.v_max);
  const std::size_t cells = cls.table_size();
  double count = 1.0;
  for (std::size_t c = 0; c < cells; ++c) count *= levels.size();
  if (count > static_cast<double>(cap)) {
    throw std::length_error("build_grid_class: class size exceeds cap (" +
                            std::to_string(cap) + ")");
  }
  std::vector<std::size_t> digit(cells, 0);
  while (true) {
    Table f(cells);
    for (std::size_t c = 0; c < cells; ++c) f[c] = levels[digit[c]];
    cls.candidates.push_back(std::move(f));
    std::size_t c = 0;
    while (c < cells && ++digit[c] == levels.size()) digit[c++] = 0;
    if (c == cells) break;
  }
  return cls;
}

FunctionClass build_exact_class(const MarkovGame& game, int player,
                                FunctionKind kind,
                                const std::vector<JointPolicy>& policies,
                                int padding, std::uint64_t seed,
                                std::size_t cap) {
  if (policies.empty()) {
    throw std::invalid_argument("build_exact_class: no policies");
  }
  if (policies.size() + static_cast<std::size_t>(std::max(padding, 0)) > cap) {
    throw std::length_error("build_exact_class: class size exceeds cap");
  }
  auto cls = Empty(game, player, kind);
  for (const auto& pi : policies) {
    auto eval = evaluate_policy(game, player, pi);
    auto table = kind == FunctionKind::kQ ? std::move(eval.q) : std::move(eval.v);
    // Clamp solver round-off so the class invariant holds exactly.
    for (auto& x : table) x = std::clamp(x, 0.0, cls.v_max);
    cls.candidates.push_back(std::move(table));
  }
  Rng rng(seed);
  const int base_count = static_cast<int>(cls.candidates.size());
  for (int j = 0; j < padding; ++j) {
    Table f = cls.candidates[j % base_count];
    const int cell = rng.UniformInt(static_cast<int>(f.size()));
    f[cell] = rng.Uniform(0.0, cls.v_max);
    cls.candidates.push_back(std::move(f));
  }
  return cls;
}

std::vector<FunctionClass> build_exact_classes(const MarkovGame& game,
                                               const ExtendedClass& ext,
                                               FunctionKind kind, int padding,
                                               std::uint64_t seed) {
  std::vector<FunctionClass> out;
  const Rng master(seed);
  for (int i = 0; i < ext.num_players(); ++i) {
    out.push_back(build_exact_class(game, i, kind, ext.players[i].policies,
                                    padding, master.Derive(i).key()));
  }
  return out;
}

FunctionClass mirror_class(const FunctionClass& cls, int player) {
  FunctionClass out = cls;
  out.player = player;
  for (auto& f : out.candidates) {
    for (auto& x : f) x = cls.v_max - x;
  }
  return out;
}

Table bellman_residual(const MarkovGame& game, int player,
                       const JointPolicy& pi, const Table& f,
                       FunctionKind kind) {
  Table tf = kind == FunctionKind::kQ ? bellman_apply(game, player, pi, f)
                                      : bellman_apply_state(game, player, pi, f);
  for (std::size_t k = 0; k < tf.size(); ++k) tf[k] = f[k] - tf[k];
  return tf;
}

double weighted_square(const Table& residual, const Table& d) {
  double total = 0.0;
  for (std::size_t k = 0; k < residual.size(); ++k) {
    total += d[k] * residual[k] * residual[k];
  }
  return total;
}

std::vector<Table> admissible_distributions(const MarkovGame& game,
                                            const ExtendedClass& ext,
                                            int player,
                                            const DataDistribution& dist,
                                            FunctionKind kind) {
  std::vector<Table> out;
  for (const auto& pi : ext.players[player].policies) {
    auto d = occupancy(game, pi);
    out.push_back(kind == FunctionKind::kQ
                      ? std::move(d)
                      : state_marginal(d, game.num_states()));
  }
  out.push_back(kind == FunctionKind::kQ ? dist.table() : dist.state_marginal());
  return out;
}

double realizability_error(const MarkovGame& game, const ExtendedClass& ext,
                           const std::vector<FunctionClass>& classes,
                           const DataDistribution& dist) {
  double worst = 0.0;
  for (int i = 0; i < ext.num_players(); ++i) {
    const auto& cls = classes.at(i);
    const auto adm = admissible_distributions(game, ext, i, dist, cls.kind);
    for (const auto& pi : ext.players[i].policies) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& f : cls.candidates) {
        const auto res = bellman_residual(game, i, pi, f, cls.kind);
        double sup = 0.0;
        for (const auto& d : adm) {
          sup = std::max(sup, weighted_square(res, d));
          if (sup >= best) break;
        }
        best = std::min(best, sup);
      }
      worst = std::max(worst, best);
    }
  }
  return worst;
}

double completeness_error(const MarkovGame& game, const ExtendedClass& ext,
                          const std::vector<FunctionClass>& classes,
                          const DataDistribution& dist) {
  double worst = 0.0;
  for (int i = 0; i < ext.num_players(); ++i) {
    const auto& cls = classes.at(i);
    const Table& d =
        cls.kind == FunctionKind::kQ ? dist.table() : dist.state_marginal();
    for (const auto& pi : ext.players[i].policies) {
      for (const auto& f : cls.candidates) {
        const Table target =
            cls.kind == FunctionKind::kQ
                ? bellman_apply(game, i, pi, f)
                : bellman_apply_state(game, i, pi, f);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& g : cls.candidates) {
          double err = 0.0;
          for (std::size_t k = 0; k < g.size(); ++k) {
            const double r = g[k] - target[k];
            err += d[k] * r * r;
          }
          best = std::min(best, err);
          if (best == 0.0) break;
        }
        worst = std::max(worst, best);
      }
    }
  }
  return worst;
}

double coverage_coefficient(const MarkovGame& game, const JointPolicy& pi,
                            const FunctionClass& cls, const Table& d,
                            const Table& data) {
  // Squared residuals this small are evaluation round-off.
  const double floor = 1e-24 * game.v_max() * game.v_max();
  double worst = 1.0;
  for (const auto& f : cls.candidates) {
    const auto res = bellman_residual(game, cls.player, pi, f, cls.kind);
    const double num = weighted_square(res, d);
    const double den = weighted_square(res, data);
    if (den <= floor) {
      if (num <= floor) continue;
      return std::numeric_limits<double>::infinity();
    }
    worst = std::max(worst, num / den);
  }
  return worst;
}

std::string serialize_function_class(const FunctionClass& cls) {
  nlohmann::json rec;
  rec["format"] = "bcel-function-class/1";
  rec["player"] = cls.player;
  rec["kind"] = cls.kind == FunctionKind::kQ ? "Q" : "V";
  rec["count"] = cls.size();
  rec["S"] = cls.num_states;
  rec["joint_actions"] = cls.num_joint_actions;
  rec["v_max"] = cls.v_max;
  rec["tables"] = cls.candidates;
  return rec.dump() + "\n";
}

FunctionClass deserialize_function_class(const std::string& text) {
  nlohmann::json rec;
  try {
    rec = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("byte " + std::to_string(e.byte), e.what());
  }
  FunctionClass cls;
  try {
    if (rec.at("format") != "bcel-function-class/1") {
      throw ParseError("format", "unsupported function-class format");
    }
    cls.player = rec.at("player").get<int>();
    const auto kind = rec.at("kind").get<std::string>();
    if (kind != "Q" && kind != "V") throw ParseError("kind", "expected Q or V");
    cls.kind = kind == "Q" ? FunctionKind::kQ : FunctionKind::kV;
    cls.num_states = rec.at("S").get<int>();
    cls.num_joint_actions = rec.at("joint_actions").get<int>();
    cls.v_max = rec.at("v_max").get<double>();
    cls.candidates = rec.at("tables").get<std::vector<Table>>();
    if (rec.at("count").get<int>() != cls.size()) {
      throw ParseError("count", "does not match the number of tables");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("<record>", e.what());
  }
  try {
    cls.Validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError("tables", e.what());
  }
  return cls;
}

}  // namespace bcel
