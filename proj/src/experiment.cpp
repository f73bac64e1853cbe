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

#include "bcel/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include "bcel/bcel_v.hpp"
#include "bcel/exact_oracle.hpp"
#include "bcel/random.hpp"
#include "json.hpp"

namespace bcel {
namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Stream used for calibration pilots, disjoint from the trial streams.
constexpr std::uint64_t kCalibrationStream = 0xCA11B4A7E0000000ULL;
constexpr std::size_t kMaxDeterministicClass = 4096;

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename T>
void Take(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + key + ": " + e.what());
  }
}

void RejectUnknown(const json& obj, std::initializer_list<const char*> keys,
                   const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : obj.items()) {
    if (std::none_of(keys.begin(), keys.end(),
                     [&](const char* x) { return k == x; })) {
      throw ConfigError("unknown config key " + where + k);
    }
  }
}

std::vector<PlayerPolicy> AllDeterministic(int num_states, int num_actions) {
  std::vector<PlayerPolicy> out;
  std::vector<int> choice(num_states, 0);
  while (true) {
    out.push_back(PlayerPolicy::Deterministic(num_actions, choice));
    int s = 0;
    while (s < num_states && ++choice[s] == num_actions) choice[s++] = 0;
    if (s == num_states) break;
  }
  return out;
}

PlayerPolicy RandomPolicy(Rng rng, int num_states, int num_actions) {
  PlayerPolicy p{num_states, num_actions, {}};
  for (int s = 0; s < num_states; ++s) {
    const auto row = rng.UniformSimplex(num_actions);
    p.probs.insert(p.probs.end(), row.begin(), row.end());
  }
  return p;
}

double Median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::string JoinDoubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out += ';';
    out += format_double(v[k]);
  }
  return out;
}

// Quotes a CSV field if it contains a separator or a quote.
std::string Field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string Row(std::initializer_list<std::string> fields) {
  std::string out;
  bool first = true;
  for (const auto& f : fields) {
    if (!first) out += ',';
    out += Field(f);
    first = false;
  }
  return out + "\n";
}

std::string Header(const PreparedExperiment& prep, const std::string& schema,
                   const std::vector<std::string>& artifacts) {
  const auto& c = prep.config;
  std::string grid;
  for (std::size_t k = 0; k < c.n_grid.size(); ++k) {
    grid += (k ? ";" : "") + std::to_string(c.n_grid[k]);
  }
  std::string out = "# " + schema + "\n";
  out += "# variant=" + to_string(c.variant) + " eq=" + to_string(c.eq) +
         " seed=" + std::to_string(c.seed) +
         " trials=" + std::to_string(c.trials) + " n_grid=" + grid +
         " delta=" + format_double(c.delta) +
         " threshold_mode=" + to_string(c.threshold_mode) +
         " data=" + c.data + "\n";
  for (const auto& a : artifacts) out += "# artifact " + a + "\n";
  return out;
}

int SelectedMode(const std::vector<int>& picks) {
  std::map<int, int> counts;
  for (int p : picks) ++counts[p];
  int best = -1, best_count = 0;
  for (const auto& [p, c] : counts) {
    if (c > best_count) best = p, best_count = c;
  }
  return best;
}

bool Sandwich(const PreparedExperiment& prep, const IntervalTable& intervals) {
  constexpr double kTol = 1e-9;
  for (std::size_t i = 0; i < prep.values.size(); ++i) {
    for (std::size_t k = 0; k < prep.values[i].size(); ++k) {
      const double v = prep.values[i][k];
      if (v < intervals[i][k].lower - kTol || v > intervals[i][k].upper + kTol) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kQ: return "q";
    case Variant::kV: return "v";
    case Variant::kZeroSum: return "zerosum";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  if (name == "q") return Variant::kQ;
  if (name == "v") return Variant::kV;
  if (name == "zerosum") return Variant::kZeroSum;
  throw ConfigError("unknown variant '" + name + "' (q|v|zerosum)");
}

std::string to_string(ThresholdMode mode) {
  switch (mode) {
    case ThresholdMode::kPaper: return "paper";
    case ThresholdMode::kOverride: return "override";
    case ThresholdMode::kCalibrated: return "calibrated";
    case ThresholdMode::kFixed: return "fixed";
  }
  return "?";
}

ThresholdMode parse_threshold_mode(const std::string& name) {
  if (name == "paper") return ThresholdMode::kPaper;
  if (name == "override") return ThresholdMode::kOverride;
  if (name == "calibrated") return ThresholdMode::kCalibrated;
  if (name == "fixed") return ThresholdMode::kFixed;
  throw ConfigError("unknown threshold mode '" + name +
                    "' (paper|calibrated|override|fixed)");
}

void ExperimentConfig::Validate() const {
  if (n_grid.empty()) throw ConfigError("n_grid is empty");
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    if (n_grid[k] < 1) throw ConfigError("n_grid entries must be positive");
    if (k && n_grid[k] <= n_grid[k - 1]) {
      throw ConfigError("n_grid must be strictly ascending");
    }
  }
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must be in (0, 1)");
  if (pilots < 1) throw ConfigError("pilots must be at least 1");
  if (padding < 0) throw ConfigError("padding must be nonnegative");
  if (!(eps_f >= 0.0)) throw ConfigError("eps_f must be nonnegative");
  if (data != "sample" && data != "exhaustive") {
    throw ConfigError("data must be 'sample' or 'exhaustive'");
  }
  if (variant == Variant::kZeroSum && eq != Equilibrium::kNE) {
    throw ConfigError("the zerosum variant uses eq=ne");
  }
  if (threshold_mode == ThresholdMode::kFixed && !(threshold_value >= 0.0)) {
    throw ConfigError("threshold value must be nonnegative");
  }
}

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  RejectUnknown(root,
                {"game", "distribution", "policy_class", "eq", "variant",
                 "n_grid", "trials", "delta", "threshold", "padding",
                 "padding_seed", "eps_f", "width_constant", "data", "seed",
                 "out"},
                "");
  ExperimentConfig c;
  if (root.contains("game")) {
    const auto& g = root["game"];
    if (g.is_string()) {
      c.game.source = g.get<std::string>();
    } else {
      RejectUnknown(g, {"source", "seed", "players", "states", "actions",
                        "discount", "zero_sum"}, "game.");
      Take(g, "source", c.game.source, "game.");
      Take(g, "seed", c.game.seed, "game.");
      Take(g, "players", c.game.players, "game.");
      Take(g, "states", c.game.states, "game.");
      Take(g, "actions", c.game.actions, "game.");
      Take(g, "discount", c.game.discount, "game.");
      Take(g, "zero_sum", c.game.zero_sum, "game.");
    }
  }
  if (root.contains("distribution")) {
    const auto& d = root["distribution"];
    if (d.is_string()) {
      c.distribution.kind = d.get<std::string>();
    } else {
      RejectUnknown(d, {"kind", "p1", "p2", "seed", "path"}, "distribution.");
      Take(d, "kind", c.distribution.kind, "distribution.");
      Take(d, "p1", c.distribution.p1, "distribution.");
      Take(d, "p2", c.distribution.p2, "distribution.");
      Take(d, "seed", c.distribution.seed, "distribution.");
      Take(d, "path", c.distribution.path, "distribution.");
    }
  }
  if (root.contains("policy_class")) {
    const auto& p = root["policy_class"];
    if (p.is_string()) {
      c.policy_class.kind = p.get<std::string>();
    } else {
      RejectUnknown(p, {"kind", "per_player", "seed", "path"}, "policy_class.");
      Take(p, "kind", c.policy_class.kind, "policy_class.");
      Take(p, "per_player", c.policy_class.per_player, "policy_class.");
      Take(p, "seed", c.policy_class.seed, "policy_class.");
      Take(p, "path", c.policy_class.path, "policy_class.");
    }
  }
  std::string eq = "ne", variant = "q";
  Take(root, "eq", eq, "");
  Take(root, "variant", variant, "");
  try {
    c.eq = parse_equilibrium(eq);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("eq: ") + e.what());
  }
  c.variant = parse_variant(variant);
  Take(root, "n_grid", c.n_grid, "");
  Take(root, "trials", c.trials, "");
  Take(root, "delta", c.delta, "");
  if (root.contains("threshold")) {
    const auto& t = root["threshold"];
    std::string mode = to_string(c.threshold_mode);
    if (t.is_string()) {
      mode = t.get<std::string>();
    } else {
      RejectUnknown(t, {"mode", "value", "stat_constant", "approx_constant",
                        "pilots"}, "threshold.");
      Take(t, "mode", mode, "threshold.");
      Take(t, "value", c.threshold_value, "threshold.");
      Take(t, "stat_constant", c.stat_constant, "threshold.");
      Take(t, "approx_constant", c.approx_constant, "threshold.");
      Take(t, "pilots", c.pilots, "threshold.");
    }
    c.threshold_mode = parse_threshold_mode(mode);
  }
  Take(root, "padding", c.padding, "");
  Take(root, "padding_seed", c.padding_seed, "");
  Take(root, "eps_f", c.eps_f, "");
  Take(root, "width_constant", c.width_constant, "");
  Take(root, "data", c.data, "");
  Take(root, "seed", c.seed, "");
  Take(root, "out", c.out, "");
  return c;
}

std::string config_to_json(const ExperimentConfig& c) {
  json root;
  root["game"] = {{"source", c.game.source},   {"seed", c.game.seed},
                  {"players", c.game.players}, {"states", c.game.states},
                  {"actions", c.game.actions}, {"discount", c.game.discount},
                  {"zero_sum", c.game.zero_sum}};
  root["distribution"] = {{"kind", c.distribution.kind},
                          {"p1", c.distribution.p1},
                          {"p2", c.distribution.p2},
                          {"seed", c.distribution.seed},
                          {"path", c.distribution.path}};
  root["policy_class"] = {{"kind", c.policy_class.kind},
                          {"per_player", c.policy_class.per_player},
                          {"seed", c.policy_class.seed},
                          {"path", c.policy_class.path}};
  root["eq"] = to_string(c.eq);
  root["variant"] = to_string(c.variant);
  root["n_grid"] = c.n_grid;
  root["trials"] = c.trials;
  root["delta"] = c.delta;
  root["threshold"] = {{"mode", to_string(c.threshold_mode)},
                       {"value", c.threshold_value},
                       {"stat_constant", c.stat_constant},
                       {"approx_constant", c.approx_constant},
                       {"pilots", c.pilots}};
  root["padding"] = c.padding;
  root["padding_seed"] = c.padding_seed;
  root["eps_f"] = c.eps_f;
  root["width_constant"] = c.width_constant;
  root["data"] = c.data;
  root["seed"] = c.seed;
  // The output location is left out so that the record, and every header
  // that hashes it, does not depend on where a run was written.
  return root.dump(2) + "\n";
}

std::string serialize_policy_class(const PolicyClass& cls) {
  if (cls.policies.empty()) throw std::invalid_argument("empty policy class");
  const auto& space = cls.policies.front().space();
  json rec;
  rec["format"] = "bcel-policy-class/1";
  rec["m"] = space.num_players();
  rec["S"] = cls.policies.front().num_states();
  std::vector<int> counts;
  for (int i = 0; i < space.num_players(); ++i) {
    counts.push_back(space.action_count(i));
  }
  rec["action_counts"] = counts;
  json policies = json::array();
  for (const auto& pi : cls.policies) {
    json p;
    if (pi.is_product()) {
      json marginals = json::array();
      for (const auto& m : pi.marginals()) marginals.push_back(m.probs);
      p["marginals"] = marginals;
    } else {
      p["joint"] = pi.table();
    }
    policies.push_back(p);
  }
  rec["policies"] = policies;
  json devs = json::array();
  for (const auto& list : cls.deviations) {
    json l = json::array();
    for (const auto& d : list) l.push_back(d.probs);
    devs.push_back(l);
  }
  rec["deviations"] = devs;
  return rec.dump() + "\n";
}

PolicyClass deserialize_policy_class(const std::string& text) {
  json rec;
  try {
    rec = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("byte " + std::to_string(e.byte), e.what());
  }
  try {
    if (rec.at("format") != "bcel-policy-class/1") {
      throw ParseError("format", "unsupported policy-class format");
    }
    const int m = rec.at("m").get<int>();
    const int s = rec.at("S").get<int>();
    const auto counts = rec.at("action_counts").get<std::vector<int>>();
    if (static_cast<int>(counts.size()) != m) {
      throw ParseError("action_counts", "expected " + std::to_string(m) +
                                            " entries");
    }
    const JointActionSpace space(counts);
    std::vector<JointPolicy> policies;
    const auto& list = rec.at("policies");
    for (std::size_t k = 0; k < list.size(); ++k) {
      const auto& p = list[k];
      const std::string where = "policies[" + std::to_string(k) + "]";
      try {
        if (p.contains("marginals")) {
          std::vector<PlayerPolicy> marginals;
          const auto& ms = p.at("marginals");
          if (static_cast<int>(ms.size()) != m) {
            throw std::invalid_argument("wrong number of marginals");
          }
          for (int i = 0; i < m; ++i) {
            marginals.push_back(
                {s, counts[i], ms[i].get<std::vector<double>>()});
          }
          policies.push_back(JointPolicy::Product(space, marginals));
        } else {
          policies.push_back(JointPolicy::Correlated(
              space, s, p.at("joint").get<std::vector<double>>()));
        }
      } catch (const ParseError&) {
        throw;
      } catch (const std::exception& e) {
        throw ParseError(where, e.what());
      }
    }
    auto cls = PolicyClass::FromPolicies(std::move(policies));
    if (rec.contains("deviations")) {
      const auto& devs = rec.at("deviations");
      if (static_cast<int>(devs.size()) != m) {
        throw ParseError("deviations", "expected one list per player");
      }
      for (int i = 0; i < m; ++i) {
        cls.deviations[i].clear();
        for (const auto& d : devs[i]) {
          PlayerPolicy p{s, counts[i], d.get<std::vector<double>>()};
          if (p.probs.size() != static_cast<std::size_t>(s) * counts[i]) {
            throw ParseError("deviations", "wrong table size");
          }
          cls.deviations[i].push_back(std::move(p));
        }
      }
    }
    return cls;
  } catch (const json::exception& e) {
    throw ParseError("<record>", e.what());
  }
}

std::string serialize_distribution(const DataDistribution& dist) {
  json rec;
  rec["format"] = "bcel-distribution/1";
  rec["S"] = dist.num_states();
  rec["A"] = dist.num_joint_actions();
  rec["table"] = dist.table();
  return rec.dump() + "\n";
}

DataDistribution deserialize_distribution(const std::string& text) {
  json rec;
  try {
    rec = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("byte " + std::to_string(e.byte), e.what());
  }
  try {
    if (rec.at("format") != "bcel-distribution/1") {
      throw ParseError("format", "unsupported distribution format");
    }
    return DataDistribution(rec.at("S").get<int>(), rec.at("A").get<int>(),
                            rec.at("table").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw ParseError("<record>", e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError("table", e.what());
  }
}

std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

Instance build_instance(const ExperimentConfig& config) {
  config.Validate();
  const auto& gs = config.game;
  std::optional<MarkovGame> game;
  if (gs.source == "builtin:matrix-example") {
    game = build_matrix_game(example_payoff());
  } else if (gs.source == "random") {
    if (gs.players < 1 || gs.states < 1 ||
        static_cast<int>(gs.actions.size()) != gs.players) {
      throw ConfigError("random game: need players >= 1, states >= 1 and one "
                        "action count per player");
    }
    if (!(gs.discount >= 0.0 && gs.discount < 1.0)) {
      throw ConfigError("random game: discount must be in [0, 1)");
    }
    game = build_random_game(gs.seed, gs.players, gs.states, gs.actions,
                             gs.discount);
    if (gs.zero_sum) {
      if (gs.players != 2) throw ConfigError("zero_sum needs two players");
      game = make_zero_sum(*game);
    }
  } else {
    game = deserialize_game(ReadFile(gs.source));
  }
  if (config.variant == Variant::kZeroSum && !is_zero_sum(*game)) {
    throw ConfigError("the zerosum variant needs a two-player zero-sum game");
  }

  const auto& ds = config.distribution;
  std::optional<DataDistribution> dist;
  if (ds.kind == "uniform") {
    dist = DataDistribution::Uniform(*game);
  } else if (ds.kind == "random") {
    dist = DataDistribution::Random(*game, ds.seed);
  } else if (ds.kind == "matrix-example") {
    if (game->num_states() != 1 || game->num_joint_actions() != 9) {
      throw ConfigError("matrix-example distribution needs a 3x3 matrix game");
    }
    try {
      dist = DataDistribution::MatrixExample(ds.p1, ds.p2);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("distribution: ") + e.what());
    }
  } else if (ds.kind == "file") {
    dist = deserialize_distribution(ReadFile(ds.path));
    if (dist->num_states() != game->num_states() ||
        dist->num_joint_actions() != game->num_joint_actions()) {
      throw ConfigError("distribution file does not match the game");
    }
  } else {
    throw ConfigError("unknown distribution kind '" + ds.kind + "'");
  }

  const auto& cs = config.policy_class;
  const int m = game->num_players();
  std::vector<std::vector<PlayerPolicy>> lists(m);
  std::optional<PolicyClass> cls;
  if (cs.kind == "deterministic") {
    double total = 1.0;
    for (int i = 0; i < m; ++i) {
      total *= std::pow(game->joint().action_count(i), game->num_states());
    }
    if (total > kMaxDeterministicClass) {
      throw ConfigError("deterministic class too large (" +
                        format_double(total) + " profiles)");
    }
    for (int i = 0; i < m; ++i) {
      lists[i] = AllDeterministic(game->num_states(),
                                  game->joint().action_count(i));
    }
    cls = PolicyClass::ProductOf(game->joint(), lists);
  } else if (cs.kind == "random-products") {
    if (cs.per_player < 1) throw ConfigError("per_player must be positive");
    const Rng root(cs.seed);
    for (int i = 0; i < m; ++i) {
      for (int k = 0; k < cs.per_player; ++k) {
        lists[i].push_back(RandomPolicy(root.Derive(i).Derive(k),
                                        game->num_states(),
                                        game->joint().action_count(i)));
      }
    }
    cls = PolicyClass::ProductOf(game->joint(), lists);
  } else if (cs.kind == "file") {
    cls = deserialize_policy_class(ReadFile(cs.path));
    if (cls->policies.front().num_states() != game->num_states() ||
        !(cls->policies.front().space() == game->joint())) {
      throw ConfigError("policy class does not match the game");
    }
    std::size_t product = 1;
    for (const auto& d : cls->deviations) product *= d.size();
    const bool all_product =
        std::all_of(cls->policies.begin(), cls->policies.end(),
                    [](const JointPolicy& p) { return p.is_product(); });
    if (all_product && product == cls->policies.size()) lists = cls->deviations;
    else lists.clear();
  } else {
    throw ConfigError("unknown policy class kind '" + cs.kind + "'");
  }
  if (config.variant == Variant::kZeroSum && lists.size() != 2) {
    throw ConfigError("the zerosum variant needs a product class");
  }
  return {std::move(*game), std::move(*dist), std::move(*cls), std::move(lists)};
}

PreparedExperiment prepare_experiment(const ExperimentConfig& config) {
  PreparedExperiment prep{config, build_instance(config), {}, {}, {}, {}, 0, 0,
                          {}};
  const auto& game = prep.instance.game;
  if (config.variant == Variant::kZeroSum) {
    prep.instance.policies =
        zero_sum_class(game, prep.instance.lists[0], prep.instance.lists[1]);
  }
  const auto& cls = prep.instance.policies;
  prep.ext = extended_class(cls, config.eq);
  if (config.variant == Variant::kZeroSum) {
    prep.classes.push_back(build_exact_class(game, 0, FunctionKind::kQ,
                                             prep.ext.players[0].policies,
                                             config.padding,
                                             config.padding_seed));
    prep.classes.push_back(mirror_class(prep.classes[0], 1));
  } else {
    prep.classes = build_exact_classes(
        game, prep.ext,
        config.variant == Variant::kV ? FunctionKind::kV : FunctionKind::kQ,
        config.padding, config.padding_seed);
  }
  prep.exact_gaps = exact_gaps(game, cls, config.eq);
  prep.values.resize(prep.ext.num_players());
  for (int i = 0; i < prep.ext.num_players(); ++i) {
    for (const auto& pi : prep.ext.players[i].policies) {
      prep.values[i].push_back(evaluate_policy(game, i, pi).initial_value);
    }
  }
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < cls.size(); ++k) {
    if (prep.exact_gaps[k] < best) best = prep.exact_gaps[k], prep.reference = k;
  }
  if (std::isfinite(best)) {
    prep.unilateral_coef = unilateral_coefficient(
        game, prep.ext, prep.classes, prep.instance.distribution,
        prep.reference);
  } else {
    prep.unilateral_coef = kNaN;
  }
  for (std::size_t j = 0; j < config.n_grid.size(); ++j) {
    double t = config.threshold_value;
    if (config.threshold_mode == ThresholdMode::kCalibrated) {
      const auto seed =
          Rng(config.seed).Derive(kCalibrationStream).Derive(j).key();
      t = config.variant == Variant::kV
              ? calibrate_threshold_v(game, prep.ext, prep.classes,
                                      prep.instance.distribution,
                                      config.n_grid[j], config.delta,
                                      config.pilots, seed)
              : calibrate_threshold(game, prep.ext, prep.classes,
                                    prep.instance.distribution,
                                    config.n_grid[j], config.delta,
                                    config.pilots, seed);
    }
    prep.thresholds.push_back(t);
  }
  return prep;
}

namespace {

void AddAudits(const PreparedExperiment& prep, const BcelResult& result,
               const OfflineDataset& data, TrialResult& out) {
  const auto& c = prep.config;
  const auto& game = prep.instance.game;
  const double gamma = game.discount();
  const double slack = 2.0 * std::sqrt(c.eps_f) / (1.0 - gamma);
  out.audits.push_back({"sandwich", "all", 0, 0, out.sandwich, true, ""});
  for (const auto& row : out.rows) {
    if (!row.eligible) continue;
    const std::string subject = "policy=" + std::to_string(row.policy);
    out.audits.push_back({"upper_bound", subject, row.true_gap,
                          row.estimated_gap + slack,
                          row.true_gap <= row.estimated_gap + slack + 1e-9,
                          !out.sandwich, ""});
    out.audits.push_back({"adaptive_le_unilateral", subject, row.adaptive,
                          row.unilateral,
                          row.adaptive <= row.unilateral + 1e-12, false, ""});
  }
  const std::string composite =
      c.variant == Variant::kV ? "composite_bound_v" : "composite_bound";
  for (const auto& t : theorem_checks(game, prep.ext, result, prep.exact_gaps,
                                      c.eps_f)) {
    out.audits.push_back({composite,
                          "comparator=" + std::to_string(t.comparator),
                          t.selected_gap, t.rhs, t.holds, !out.sandwich,
                          "adaptive=" + format_double(t.adaptive)});
  }
  WidthBoundInputs in;
  in.n = data.size();
  in.class_total = total_class_size(prep.classes);
  in.ext_size = static_cast<double>(prep.ext.all.size());
  in.delta = c.delta;
  in.eps_f = c.eps_f;
  in.constant = c.width_constant;
  const int members = prep.instance.policies.size();
  for (int i = 0; i < prep.ext.num_players(); ++i) {
    for (int k = 0; k < members; ++k) {
      const int idx = prep.ext.players[i].base_index[k];
      const auto& pi = prep.ext.players[i].policies[idx];
      if (c.variant == Variant::kV) {
        in.c_a = weighted_loss_context(prep.instance.distribution, pi).c_a;
        if (!std::isfinite(in.c_a)) continue;
      }
      const auto wb = width_bound(game, prep.classes[i], pi,
                                  result.spaces[i][idx],
                                  prep.instance.distribution, in);
      out.audits.push_back(
          {"width_bound",
           "player=" + std::to_string(i) + " policy=" + std::to_string(k),
           wb.width, wb.rhs, wb.holds(), true,
           "probe=" + wb.probes[wb.best_probe].name +
               " needed_constant=" + format_double(wb.needed_constant)});
    }
  }
  if (out.selected >= 0 && std::isfinite(prep.unilateral_coef)) {
    const double kappa = unilateral_kappa(
        out.selected_gap, prep.unilateral_coef, data.size(), in.class_total,
        in.ext_size, c.delta, game.v_max(), gamma);
    out.audits.push_back({"rate_constant", "selected", kappa,
                          prep.unilateral_coef, std::isfinite(kappa), true,
                          "reference=" + std::to_string(prep.reference)});
  }
}

void FillRows(const PreparedExperiment& prep, const BcelResult& result,
              TrialResult& out) {
  const int m = prep.ext.num_players();
  for (const auto& e : result.report.entries) {
    PolicyRow row;
    row.policy = e.policy;
    row.eligible = e.eligible;
    row.estimated_gap = e.eligible ? e.estimated_gap : kNaN;
    row.true_gap = prep.exact_gaps[e.policy];
    for (int i = 0; i < m; ++i) {
      const auto& iv =
          result.intervals[i][prep.ext.players[i].base_index[e.policy]];
      row.upper.push_back(iv.upper);
      row.lower.push_back(iv.lower);
      double dev = kNaN;
      if (e.eligible && !e.deviation_upper[i].empty()) {
        dev = *std::max_element(e.deviation_upper[i].begin(),
                                e.deviation_upper[i].end());
      }
      row.deviation_upper.push_back(dev);
    }
    if (e.eligible) {
      const auto b = bound_breakdown(prep.ext, result.intervals, e.policy);
      row.adaptive = b.adaptive;
      row.unilateral = b.unilateral;
    } else {
      row.adaptive = row.unilateral = kNaN;
    }
    out.rows.push_back(std::move(row));
  }
}

}  // namespace

TrialResult run_trial(const PreparedExperiment& prep, int trial, int n_index,
                      bool with_audit) {
  const auto& c = prep.config;
  TrialResult out;
  out.trial = trial;
  out.n = c.n_grid[n_index];
  out.data_seed = Rng(c.seed).Derive(trial).Derive(n_index).key();
  try {
    const auto& game = prep.instance.game;
    const auto& dist = prep.instance.distribution;
    const auto data = c.data == "exhaustive"
                          ? exhaustive_dataset(game, dist, out.n)
                          : sample_dataset(game, dist, out.n, out.data_seed);
    ThresholdRule rule;
    rule.mode = c.threshold_mode;
    rule.delta = c.delta;
    rule.stat_constant = c.stat_constant;
    rule.approx_constant = c.approx_constant;
    rule.eps_f = c.eps_f;
    rule.value = prep.thresholds[n_index];
    BcelResult result;
    if (c.variant == Variant::kZeroSum) {
      const auto& lists = prep.instance.lists;
      out.table = build_interval_table(game, lists[0], lists[1], prep.classes,
                                       data, rule, &result);
      out.zs_selection = select_independent(*out.table);
      const auto eq = exact_equilibrium(*out.table);
      out.zs_bound = proposition_bound(*out.table, eq.mu, eq.nu);
      out.selected = out.zs_selection.mu * out.table->cols + out.zs_selection.nu;
      out.selected_gap =
          table_duality_gap(*out.table, out.zs_selection.mu, out.zs_selection.nu);
    } else {
      const BcelConfig config{c.eq, rule};
      result = c.variant == Variant::kV
                   ? run_bcel_v(game, prep.ext, prep.classes, data, config)
                   : run_bcel(game, prep.ext, prep.classes, data, config);
      out.selected = result.selected();
      out.selected_gap = prep.exact_gaps[out.selected];
    }
    out.threshold = result.threshold;
    out.sandwich = Sandwich(prep, result.intervals);
    FillRows(prep, result, out);
    if (with_audit) {
      AddAudits(prep, result, data, out);
      if (out.table) {
        out.audits.push_back({"duality_bound", "selected", out.selected_gap,
                              out.zs_bound.bound(),
                              out.selected_gap <= out.zs_bound.bound() + 1e-9,
                              !out.sandwich,
                              "reference_gap=" +
                                  format_double(out.zs_bound.reference_gap)});
        out.audits.push_back({"mirror", "table", out.table->mirror_error, 1e-9,
                              out.table->mirror_error <= 1e-9, false, ""});
      }
    }
  } catch (const std::exception& e) {
    out.ok = false;
    out.message = e.what();
    out.rows.clear();
    out.audits.clear();
  }
  return out;
}

int worker_count_from_env() {
  if (const char* env = std::getenv("BCEL_WORKERS")) {
    int n = 0;
    const auto res = std::from_chars(env, env + std::strlen(env), n);
    if (res.ec != std::errc() || *res.ptr != '\0' || n < 1) {
      throw ConfigError("BCEL_WORKERS must be a positive integer");
    }
    return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<TrialResult> run_trials(const PreparedExperiment& prep,
                                    bool with_audit, int workers) {
  const int grid = static_cast<int>(prep.config.n_grid.size());
  const int total = prep.config.trials * grid;
  std::vector<TrialResult> results(total);
  std::atomic<int> next{0};
  auto work = [&] {
    for (int k = next++; k < total; k = next++) {
      results[k] = run_trial(prep, k / grid, k % grid, with_audit);
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < std::min(workers, total); ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return results;
}

std::vector<double> median_selected_gaps(const PreparedExperiment& prep,
                                         const std::vector<TrialResult>& r) {
  std::vector<double> out;
  for (int n : prep.config.n_grid) {
    std::vector<double> gaps;
    for (const auto& t : r) {
      if (t.n == n && t.ok) gaps.push_back(t.selected_gap);
    }
    out.push_back(Median(gaps));
  }
  return out;
}

std::string results_csv(const PreparedExperiment& prep,
                        const std::vector<TrialResult>& results,
                        const std::vector<std::string>& artifacts) {
  const bool zs = prep.config.variant == Variant::kZeroSum;
  std::string out = Header(prep, zs ? "bcel-run-zerosum/1" : "bcel-run/1",
                           artifacts);
  if (zs) {
    out += "row,trial,n,data_seed,mu,nu,selected,upper,lower,exact,"
           "objective_j,duality_gap,bound,sandwich,mirror_error,trials_ok,"
           "sandwich_rate,median_selected_gap,selected_mode,message\n";
  } else {
    out += "row,trial,n,data_seed,policy,eligible,selected,estimated_gap,"
           "true_gap,upper,lower,deviation_upper,adaptive,unilateral,sandwich,"
           "threshold,trials_ok,sandwich_rate,median_selected_gap,"
           "selected_mode,message\n";
  }
  const auto medians = median_selected_gaps(prep, results);
  for (std::size_t j = 0; j < prep.config.n_grid.size(); ++j) {
    // Rows of this n are emitted together, trials in order.
    const int n = prep.config.n_grid[j];
    int ok = 0, sandwiches = 0;
    std::vector<int> picks;
    for (const auto& t : results) {
      if (t.n != n) continue;
      const std::string trial = std::to_string(t.trial);
      const std::string ns = std::to_string(t.n);
      const std::string seed = std::to_string(t.data_seed);
      if (!t.ok) {
        out += zs ? Row({"failure", trial, ns, seed, "", "", "", "", "", "", "",
                         "", "", "", "", "", "", "", "", t.message})
                  : Row({"failure", trial, ns, seed, "", "", "", "", "", "", "",
                         "", "", "", "", "", "", "", "", "", t.message});
        continue;
      }
      ++ok;
      sandwiches += t.sandwich;
      picks.push_back(t.selected);
      if (zs) {
        const auto& tab = *t.table;
        for (int mu = 0; mu < tab.rows; ++mu) {
          for (int nu = 0; nu < tab.cols; ++nu) {
            const bool sel =
                mu == t.zs_selection.mu && nu == t.zs_selection.nu;
            out += Row({"pair", trial, ns, seed, std::to_string(mu),
                        std::to_string(nu), sel ? "1" : "0",
                        format_double(tab.Upper(mu, nu)),
                        format_double(tab.Lower(mu, nu)),
                        format_double(tab.V(mu, nu)),
                        format_double(objective_J(tab, mu, nu)),
                        format_double(table_duality_gap(tab, mu, nu)), "",
                        t.sandwich ? "1" : "0", "", "", "", "", "", ""});
          }
        }
        out += Row({"selection", trial, ns, seed,
                    std::to_string(t.zs_selection.mu),
                    std::to_string(t.zs_selection.nu), "1", "", "", "",
                    format_double(t.zs_selection.objective),
                    format_double(t.selected_gap),
                    format_double(t.zs_bound.bound()), t.sandwich ? "1" : "0",
                    format_double(tab.mirror_error), "", "", "", "", ""});
      } else {
        for (const auto& r : t.rows) {
          out += Row({"policy", trial, ns, seed, std::to_string(r.policy),
                      r.eligible ? "1" : "0",
                      r.policy == t.selected ? "1" : "0",
                      format_double(r.estimated_gap), format_double(r.true_gap),
                      JoinDoubles(r.upper), JoinDoubles(r.lower),
                      JoinDoubles(r.deviation_upper), format_double(r.adaptive),
                      format_double(r.unilateral), t.sandwich ? "1" : "0",
                      format_double(t.threshold), "", "", "", "", ""});
        }
      }
    }
    const std::string rate =
        ok ? format_double(static_cast<double>(sandwiches) / ok) : "nan";
    const std::string mode = std::to_string(SelectedMode(picks));
    out += zs ? Row({"summary", "", std::to_string(n), "", "", "", "", "", "",
                     "", "", "", "", "", "", std::to_string(ok), rate,
                     format_double(medians[j]), mode, ""})
              : Row({"summary", "", std::to_string(n), "", "", "", "", "", "",
                     "", "", "", "", "", "", "", std::to_string(ok), rate,
                     format_double(medians[j]), mode, ""});
  }
  return out;
}

std::string audit_csv(const PreparedExperiment& prep,
                      const std::vector<TrialResult>& results,
                      const std::vector<std::string>& artifacts) {
  std::string out = Header(prep, "bcel-audit/1", artifacts);
  out += "row,trial,n,data_seed,check,subject,lhs,rhs,slack,holds,"
         "informational,sandwich,note\n";
  for (const auto& t : results) {
    const std::string trial = std::to_string(t.trial);
    const std::string ns = std::to_string(t.n);
    const std::string seed = std::to_string(t.data_seed);
    if (!t.ok) {
      out += Row({"failure", trial, ns, seed, "", "", "", "", "", "0", "0", "",
                  t.message});
      continue;
    }
    for (const auto& a : t.audits) {
      out += Row({"check", trial, ns, seed, a.check, a.subject,
                  format_double(a.lhs), format_double(a.rhs),
                  format_double(a.rhs - a.lhs), a.holds ? "1" : "0",
                  a.informational ? "1" : "0", t.sandwich ? "1" : "0", a.note});
    }
  }
  const auto s = summarize_audit(results);
  out += Row({"summary", std::to_string(s.trials), "", "", "", "",
              std::to_string(s.sandwich_failures),
              std::to_string(s.check_failures), "",
              s.passed(prep.config.delta) ? "1" : "0", "", "",
              "errors=" + std::to_string(s.errors)});
  return out;
}

AuditSummary summarize_audit(const std::vector<TrialResult>& results) {
  AuditSummary s;
  for (const auto& t : results) {
    ++s.trials;
    if (!t.ok) {
      ++s.errors;
      continue;
    }
    if (!t.sandwich) ++s.sandwich_failures;
    for (const auto& a : t.audits) {
      if (!a.informational && !a.holds) ++s.check_failures;
    }
  }
  return s;
}

}  // namespace bcel
